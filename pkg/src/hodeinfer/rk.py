"""Fourth-stage Runge-Kutta scheme for q-th order ODEs on an equispaced grid.

The state carried between grid points is ``z_k = (psi, psi', ..., psi^(q-1))``
at ``a_k = k / r_n``.  One step is ``z_{k+1} = z_k + h * (Phi^1, ..., Phi^q)``
where

``Phi^nu = T^nu + h^(q-nu) / (q-nu+1)! * sum_rho gamma[nu, rho] * k_rho``,

``T^nu`` is the truncated Taylor sum of the higher stored derivatives and the
four stage values ``k_rho = H(t_rho, U_rho, theta)`` are taken at stage
arguments built from Taylor terms of the stored derivatives; whenever such a
term would need ``psi^(q)`` it uses an earlier stage value instead, and terms
needing ``psi^(q+1)`` or higher are dropped.  For ``q = 1`` this collapses to
the classical RK4 step.

The hot loops are numba kernels that take the compiled ``H`` as an argument;
systems whose ``H`` does not compile run the same code as plain Python.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from types import SimpleNamespace

import numba
import numpy as np

from .errors import DivergedTrajectoryError, DomainError, OutOfBoxError
from .models import OdeSystem

__all__ = [
    "GridSolution",
    "gamma_coefficients",
    "rk_step",
    "solve",
    "eval_dense",
    "predict",
    "predict_many",
    "sensitivity",
    "STAGE_COEF",
    "STAGE_TIME",
]

# Row rho: coefficient of h^i * psi^(nu-1+i) in the nu-th stage argument.
STAGE_COEF = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 0.5, 0.0, 0.0],
    [1.0, 0.5, 0.25, 0.0],
    [1.0, 1.0, 0.5, 0.25],
])
STAGE_NTERMS = np.array([1, 2, 3, 4])
STAGE_TIME = np.array([0.0, 0.5, 0.5, 1.0])


def gamma_coefficients(q: int) -> np.ndarray:
    """Stage weights ``gamma[nu-1, rho-1]`` for ``nu = 1..q``, ``rho = 1..4``."""
    return _gamma_cached(int(q)).copy()


@lru_cache(maxsize=None)
def _gamma_cached(q):
    if q < 1:
        raise ValueError("q must be >= 1")
    s = q - np.arange(1, q + 1, dtype=float)  # q - nu
    den = (s + 2.0) * (s + 3.0)
    g = np.empty((q, 4))
    g[:, 0] = (s + 1.0) ** 2 / den
    g[:, 1] = 2.0 * (s + 1.0) / den
    g[:, 2] = g[:, 1]
    g[:, 3] = (1.0 - s) / den
    g.flags.writeable = False
    return g


def _build_kernels(decorate):
    coef = STAGE_COEF
    nterms = STAGE_NTERMS
    stime = STAGE_TIME

    @decorate
    def step(H, t, z, theta, h, gam, out, kbuf, ubuf):
        # Returns 0 on success, 1-4 for a non-finite stage, 5 for the update.
        q = z.shape[0]
        for rho in range(4):
            for c in range(q):
                acc = 0.0
                hp = 1.0
                for i in range(nterms[rho]):
                    d = c + i
                    if d < q:
                        acc += coef[rho, i] * hp * z[d]
                    elif d == q:
                        acc += coef[rho, i] * hp * kbuf[rho - i]
                    hp *= h
                ubuf[c] = acc
            val = H(t + stime[rho] * h, ubuf, theta)
            if not np.isfinite(val):
                return rho + 1
            kbuf[rho] = val
        for c in range(q):
            nu = c + 1
            phi = 0.0
            hp = 1.0
            fact = 1.0
            for j in range(nu, q):
                fact *= j - nu + 1
                phi += z[j] * hp / fact
                hp *= h
            fact *= q - nu + 1
            s = gam[c, 0] * kbuf[0] + gam[c, 1] * kbuf[1] + gam[c, 2] * kbuf[2] + gam[c, 3] * kbuf[3]
            phi += hp / fact * s
            val = z[c] + h * phi
            if not np.isfinite(val):
                return 5
            out[c] = val
        return 0

    @decorate
    def solve(H, z0, theta, r, gam, states):
        # Returns (step, stage) of the first failure, (-1, 0) on success.
        q = z0.shape[0]
        h = 1.0 / r
        kbuf = np.zeros(4)
        ubuf = np.zeros(q)
        for c in range(q):
            states[0, c] = z0[c]
        for k in range(r):
            status = step(H, k * h, states[k], theta, h, gam, states[k + 1], kbuf, ubuf)
            if status != 0:
                return k, status
        return -1, 0

    @decorate
    def dense(H, states, theta, r, ts, out):
        q = states.shape[1]
        h = 1.0 / r
        for i in range(ts.shape[0]):
            t = ts[i]
            k = int(t * r)
            if k > r:
                k = r
            if k < r and (k + 1) * h <= t:
                k += 1
            while k > 0 and k * h > t:
                k -= 1
            d = t - k * h
            acc = 0.0
            dp = 1.0
            fact = 1.0
            for j in range(q):
                acc += states[k, j] * dp / fact
                dp *= d
                fact *= j + 1
            if d != 0.0:
                acc += H(k * h, states[k], theta) * dp / fact
            out[i] = acc

    @decorate
    def predict_many(H, z0, thetas, r, gam, ts, out):
        # One solve + dense evaluation per row of thetas; failed rows get nan.
        q = z0.shape[0]
        states = np.empty((r + 1, q))
        status = np.zeros(thetas.shape[0], dtype=np.int64)
        for b in range(thetas.shape[0]):
            kfail, stage = solve(H, z0, thetas[b], r, gam, states)
            if kfail >= 0:
                status[b] = stage
                for i in range(ts.shape[0]):
                    out[b, i] = np.nan
            else:
                dense(H, states, thetas[b], r, ts, out[b])
        return status

    return SimpleNamespace(step=step, solve=solve, dense=dense, predict_many=predict_many)


_JIT = _build_kernels(numba.njit)
_PY = _build_kernels(lambda f: f)


def _kernels(system: OdeSystem):
    fn = system.compiled_rhs
    if fn is None:
        return _PY, system.rhs_H
    return _JIT, fn


@dataclass(frozen=True, eq=False)
class GridSolution:
    """Grid values of the numerical solution and its first ``q-1`` derivatives.

    ``states[k]`` is ``z_k`` at ``grid_points[k] = k * step``; there are
    ``r_n + 1`` nodes so both endpoints of ``[0, 1]`` are included.
    """

    grid_points: np.ndarray
    states: np.ndarray
    theta: np.ndarray
    step: float

    @property
    def r_n(self) -> int:
        return self.states.shape[0] - 1

    @property
    def values(self) -> np.ndarray:
        return self.states[:, 0]


def _as_theta(system, theta):
    theta = np.array(theta, dtype=float).reshape(-1)
    if theta.size != system.param_dim_p:
        raise ValueError(f"theta must have length {system.param_dim_p}")
    return theta


def rk_step(system: OdeSystem, t: float, z, h: float, theta=None) -> np.ndarray:
    """Advance ``z`` (length ``q``) from ``t`` to ``t + h``."""
    if not h > 0:
        raise ValueError("step size must be positive")
    theta = _as_theta(system, system.default_theta if theta is None else theta)
    z = np.array(z, dtype=float).reshape(-1)
    if z.size != system.order_q or not np.all(np.isfinite(z)):
        raise ValueError("z must be a finite vector of length q")
    kern, H = _kernels(system)
    out = np.empty_like(z)
    status = kern.step(H, float(t), z, theta, float(h), _gamma_cached(system.order_q),
                       out, np.zeros(4), np.zeros(system.order_q))
    if status != 0:
        raise DivergedTrajectoryError(0, int(status))
    return out


def solve(system: OdeSystem, theta, r_n: int) -> GridSolution:
    """Run the recursion over ``r_n`` equal steps of ``[0, 1]``."""
    r_n = int(r_n)
    if r_n < 2:
        raise ValueError("r_n must be >= 2")
    theta = _as_theta(system, theta)
    if not system.in_box(theta):
        raise OutOfBoxError(f"theta={theta} outside {system.theta_box.tolist()}")
    kern, H = _kernels(system)
    states = np.empty((r_n + 1, system.order_q))
    kfail, stage = kern.solve(H, system.init_conditions.copy(), theta, r_n,
                              _gamma_cached(system.order_q), states)
    if kfail >= 0:
        raise DivergedTrajectoryError(int(kfail), int(stage))
    step = 1.0 / r_n
    states.flags.writeable = False
    theta.flags.writeable = False
    return GridSolution(np.arange(r_n + 1) * step, states, theta, step)


def _check_times(t):
    t = np.asarray(t, dtype=float)
    bad = ~((t >= 0.0) & (t <= 1.0))
    if np.any(bad):
        raise DomainError(f"time {t.reshape(-1)[np.argmax(bad.reshape(-1))]} outside [0, 1]")
    return t


def eval_dense(sol: GridSolution, system: OdeSystem, t):
    """Local Taylor evaluation of the solution from the grid node at or below ``t``.

    Uses the stored derivatives plus ``H`` for the ``q``-th one; exact at grid
    nodes.  Accepts a scalar or an array of times.
    """
    t = _check_times(t)
    ts = np.ascontiguousarray(t.reshape(-1))
    kern, H = _kernels(system)
    out = np.empty(ts.size)
    kern.dense(H, np.ascontiguousarray(sol.states), np.array(sol.theta), sol.r_n, ts, out)
    if t.ndim == 0:
        return float(out[0])
    return out.reshape(t.shape)


def predict_many(system: OdeSystem, thetas, r_n: int, t) -> tuple[np.ndarray, np.ndarray]:
    """Solve for every row of ``thetas`` and evaluate at times ``t``.

    Returns ``(values, status)`` with ``values`` of shape ``(B, len(t))``;
    rows whose trajectory diverged are ``nan`` and have non-zero status.  No
    box check is done here.
    """
    thetas = np.ascontiguousarray(np.asarray(thetas, dtype=float).reshape(-1, system.param_dim_p))
    ts = np.ascontiguousarray(_check_times(t).reshape(-1))
    kern, H = _kernels(system)
    out = np.empty((thetas.shape[0], ts.size))
    status = kern.predict_many(H, system.init_conditions.copy(), thetas, int(r_n),
                               _gamma_cached(system.order_q), ts, out)
    return out, status


def predict(system: OdeSystem, theta, r_n: int, t) -> np.ndarray:
    """``f_{theta, r_n}(t)`` for a vector of times (box-checked, raises on divergence)."""
    theta = _as_theta(system, theta)
    if not system.in_box(theta):
        raise OutOfBoxError(f"theta={theta} outside {system.theta_box.tolist()}")
    out, status = predict_many(system, theta[None, :], r_n, t)
    if status[0] != 0:
        raise DivergedTrajectoryError(-1, int(status[0]))
    return out[0]


def sensitivity(system: OdeSystem, theta, r_n: int, t_list, rel_step=1e-5, abs_floor=1e-7) -> np.ndarray:
    """Central finite-difference ``d f_{theta, r_n}(t) / d theta``, shape ``(len(t), p)``."""
    theta = _as_theta(system, theta)
    if not system.in_box(theta, strict=True):
        raise OutOfBoxError("sensitivity needs theta strictly inside the box")
    ts = _check_times(t_list).reshape(-1)
    jac = np.empty((ts.size, system.param_dim_p))
    for j in range(system.param_dim_p):
        step = max(rel_step * abs(theta[j]), abs_floor)
        for attempt in range(2):
            up, dn = theta.copy(), theta.copy()
            up[j] += step
            dn[j] -= step
            if system.in_box(up) and system.in_box(dn):
                break
            room = min(system.upper[j] - theta[j], theta[j] - system.lower[j])
            step = 0.5 * room
        else:
            raise OutOfBoxError(f"no room for a central difference in coordinate {j}")
        vals, status = predict_many(system, np.vstack([up, dn]), r_n, ts)
        if np.any(status != 0):
            raise DivergedTrajectoryError(-1, int(status.max()))
        jac[:, j] = (vals[0] - vals[1]) / (2.0 * step)
    return jac


def observed_order(errors, ratio=2.0) -> np.ndarray:
    """log-ratio convergence orders of successive errors under grid refinement."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)
