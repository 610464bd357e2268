"""ODE systems in explicit form ``y^(q) = H(t, y, ..., y^(q-1), theta)``.

Every system also carries the implicit binding function ``F`` and its
gradient in ``theta``; ``F(t, (y, H(t, y, theta)), theta) == 0`` by
construction.  ``H`` is written with plain scalar arithmetic on indexable
``y``/``theta`` so it can be compiled with numba; ``F`` and ``dF/dtheta`` must
broadcast over numpy arrays (the two-step estimator evaluates them on whole
quadrature grids).
"""
from __future__ import annotations

import math
import re
import weakref
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

__all__ = [
    "OdeSystem",
    "make_van_der_pol",
    "make_harmonic_oscillator",
    "make_linear_null",
    "make_glucose",
    "get_model",
    "MODEL_NAMES",
]


@dataclass(frozen=True, eq=False)
class OdeSystem:
    """A q-th order scalar ODE with parameter box.

    Parameters
    ----------
    name : str
        Catalog name.
    order_q, param_dim_p : int
        ODE order and dimension of ``theta``.
    rhs_H : callable
        ``H(t, y, theta) -> float`` with ``y = (f, f', ..., f^(q-1))``.
    binding_F : callable
        ``F(t, h, theta)`` with ``h = (f, ..., f^(q))``.
    binding_F_dtheta : callable
        ``dF/dtheta(t, h, theta)``, a length-``p`` array (leading axis ``p``
        when inputs are arrays).
    init_conditions : array_like
        ``(c_0, ..., c_{q-1})``.
    theta_box : array_like
        ``(p, 2)`` array of lower/upper bounds.
    exact_solution : callable, optional
        ``f(t, theta)`` when a closed form is known.
    """

    name: str
    order_q: int
    param_dim_p: int
    rhs_H: Callable
    binding_F: Callable
    binding_F_dtheta: Callable
    init_conditions: np.ndarray
    theta_box: np.ndarray
    exact_solution: Optional[Callable] = None
    default_theta: Optional[np.ndarray] = None
    use_jit: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.order_q < 1:
            raise ValueError("order_q must be >= 1")
        if self.param_dim_p < 1:
            raise ValueError("param_dim_p must be >= 1")
        init = np.asarray(self.init_conditions, dtype=float).reshape(-1)
        box = np.asarray(self.theta_box, dtype=float).reshape(-1, 2)
        if init.shape != (self.order_q,):
            raise ValueError(f"need {self.order_q} initial conditions, got {init.size}")
        if box.shape != (self.param_dim_p, 2):
            raise ValueError("theta_box must have one (lower, upper) pair per parameter")
        if not np.all(np.isfinite(box)) or np.any(box[:, 0] >= box[:, 1]):
            raise ValueError("theta_box needs finite bounds with lower < upper")
        init.flags.writeable = False
        box.flags.writeable = False
        object.__setattr__(self, "init_conditions", init)
        object.__setattr__(self, "theta_box", box)
        if self.default_theta is not None:
            th = np.array(self.default_theta, dtype=float).reshape(-1)
            th.flags.writeable = False
            object.__setattr__(self, "default_theta", th)

    @property
    def lower(self) -> np.ndarray:
        return self.theta_box[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.theta_box[:, 1]

    def in_box(self, theta, strict=False) -> bool:
        theta = np.asarray(theta, dtype=float)
        if strict:
            return bool(np.all(theta > self.lower) and np.all(theta < self.upper))
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    @cached_property
    def compiled_rhs(self):
        """numba-compiled ``H``, or ``None`` when it cannot be compiled."""
        if not self.use_jit:
            return None
        fn = _jit_cache.get(self.rhs_H)
        if fn is None:
            try:
                import numba

                fn = numba.njit(self.rhs_H)
            except Exception:
                return None
            _jit_cache[self.rhs_H] = fn
        theta = self.default_theta if self.default_theta is not None else self.theta_box.mean(axis=1)
        try:
            fn(0.0, np.array(self.init_conditions), np.array(theta))
        except Exception:
            return None
        return fn


# one dispatcher per Python function, so systems sharing H share compiled kernels
_jit_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


# Van der Pol -----------------------------------------------------------------

def _vdp_H(t, y, theta):
    return theta[0] * (1.0 - y[0] * y[0]) * y[1] - y[0]


def _vdp_F(t, h, theta):
    return h[2] - theta[0] * (1.0 - h[0] ** 2) * h[1] + h[0]


def _vdp_dF(t, h, theta):
    return np.asarray([-(1.0 - h[0] ** 2) * h[1]])


def make_van_der_pol() -> OdeSystem:
    """Van der Pol oscillator with ``f(0) = 2``, ``f'(0) = 0`` on ``[0.1, 10]``."""
    return OdeSystem(
        name="vdp",
        order_q=2,
        param_dim_p=1,
        rhs_H=_vdp_H,
        binding_F=_vdp_F,
        binding_F_dtheta=_vdp_dF,
        init_conditions=(2.0, 0.0),
        theta_box=((0.1, 10.0),),
        default_theta=(1.0,),
    )


# harmonic oscillator ---------------------------------------------------------

def _harm_H(t, y, theta):
    return -theta[0] * theta[0] * y[0]


def _harm_F(t, h, theta):
    return h[2] + theta[0] ** 2 * h[0]


def _harm_dF(t, h, theta):
    return np.asarray([2.0 * theta[0] * h[0]])


def _harm_exact(t, theta):
    return np.cos(np.asarray(theta, dtype=float)[0] * np.asarray(t, dtype=float))


def make_harmonic_oscillator() -> OdeSystem:
    """``y'' = -theta^2 y``, ``y(0) = 1``, ``y'(0) = 0``; solution ``cos(theta t)``."""
    return OdeSystem(
        name="harmonic",
        order_q=2,
        param_dim_p=1,
        rhs_H=_harm_H,
        binding_F=_harm_F,
        binding_F_dtheta=_harm_dF,
        init_conditions=(1.0, 0.0),
        theta_box=((0.1, 10.0),),
        exact_solution=_harm_exact,
        default_theta=(2.0,),
    )


# H == 0 ----------------------------------------------------------------------

def _null_H(t, y, theta):
    return 0.0


def _make_null_F(q):
    def F(t, h, theta):
        return h[q] + 0.0 * theta[0]

    return F


def _null_dF(t, h, theta):
    return np.asarray([np.zeros_like(np.asarray(h[0], dtype=float))])


def make_linear_null(q: int, init=None) -> OdeSystem:
    """``y^(q) = 0``; the solution is the Taylor polynomial of ``init``.

    ``theta`` is a dummy scalar the solution does not depend on.
    """
    q = int(q)
    if q < 1:
        raise ValueError("q must be >= 1")
    init = np.ones(q) if init is None else np.asarray(init, dtype=float).reshape(-1)
    if init.size != q:
        raise ValueError(f"need {q} initial conditions, got {init.size}")
    coeffs = init / np.array([math.factorial(j) for j in range(q)])

    def exact(t, theta=None):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), coeffs)

    return OdeSystem(
        name=f"null-q{q}",
        order_q=q,
        param_dim_p=1,
        rhs_H=_null_H,
        binding_F=_make_null_F(q),
        binding_F_dtheta=_null_dF,
        init_conditions=init,
        theta_box=((0.1, 10.0),),
        exact_solution=exact,
        default_theta=(1.0,),
    )


# glucose-hormone, reduced to a second-order equation in glucose -------------
# theta = (m1, m2, m3, m4), forcing J(t) = 1 so S(t) = m3.

def _gluc_H(t, y, theta):
    return theta[2] - (theta[0] + theta[2]) * y[1] - (theta[0] * theta[2] + theta[1] * theta[3]) * y[0]


def _gluc_F(t, h, theta):
    m1, m2, m3, m4 = theta[0], theta[1], theta[2], theta[3]
    return h[2] + (m1 + m3) * h[1] + (m1 * m3 + m2 * m4) * h[0] - m3


def _gluc_dF(t, h, theta):
    m1, m2, m3, m4 = theta[0], theta[1], theta[2], theta[3]
    return np.asarray([
        h[1] + m3 * h[0],
        m4 * h[0],
        h[1] + m1 * h[0] - 1.0,
        m2 * h[0],
    ])


def make_glucose() -> OdeSystem:
    """Glucose concentration from the glucose-hormone pair (demo only).

    Parameters are not individually identifiable from glucose alone.
    """
    return OdeSystem(
        name="glucose",
        order_q=2,
        param_dim_p=4,
        rhs_H=_gluc_H,
        binding_F=_gluc_F,
        binding_F_dtheta=_gluc_dF,
        init_conditions=(1.0, 0.0),
        theta_box=((0.1, 5.0),) * 4,
        default_theta=(1.0, 0.5, 1.0, 0.5),
    )


MODEL_NAMES = ("vdp", "harmonic", "null-q<k>", "glucose")
_FIXED = {
    "vdp": make_van_der_pol,
    "harmonic": make_harmonic_oscillator,
    "glucose": make_glucose,
}


def get_model(name: str) -> OdeSystem:
    """Look up a model by catalog name (``vdp``, ``harmonic``, ``null-q3``, ``glucose``)."""
    if name in _FIXED:
        return _FIXED[name]()
    m = re.fullmatch(r"null-q(\d+)", name)
    if m:
        return make_linear_null(int(m.group(1)))
    raise KeyError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
