"""Clamped B-spline basis on [0, 1] and the conjugate spline-regression posterior.

With prior ``beta | sigma^2 ~ N(0, sigma^2 n^2 / k_n I)`` the conditional
posterior of the coefficients is

``N(A^{-1} X^T Y, sigma^2 A^{-1})``,  ``A = X^T X + ridge I``,  ``ridge = k_n / n^2``,

and ``sigma^2`` gets the inverse-gamma update
``IG(a + n/2, b + (Y^T Y - Y^T X A^{-1} X^T Y) / 2)`` (the log-determinant
correction of the diffuse prior is dropped).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.interpolate import BSpline

from .errors import DomainError, SingularDesignError, UnsupportedDerivativeError
from .numerics import sample_inverse_gamma

__all__ = [
    "SplineBasis",
    "SplinePosterior",
    "basis_eval",
    "design_matrix",
    "fit_posterior",
    "sample_beta",
    "sample_sigma2",
]


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Order-``m`` B-splines with ``k_n - 1`` uniform interior knots."""

    order_m: int
    kn: int

    def __post_init__(self):
        if self.order_m < 2:
            raise ValueError("order_m must be >= 2")
        if self.kn < 1:
            raise ValueError("kn must be >= 1")

    @property
    def degree(self) -> int:
        return self.order_m - 1

    @property
    def basis_dim(self) -> int:
        return self.kn + self.order_m - 1

    @cached_property
    def knots(self) -> np.ndarray:
        inner = np.arange(1, self.kn) / self.kn
        t = np.concatenate([np.zeros(self.order_m), inner, np.ones(self.order_m)])
        t.flags.writeable = False
        return t

    @cached_property
    def _bspline(self) -> BSpline:
        # identity coefficients: evaluating gives every basis function at once
        return BSpline(self.knots, np.eye(self.basis_dim), self.degree, extrapolate=True)

    def evaluate(self, t, deriv=0) -> np.ndarray:
        """Basis values (or derivatives) at an array of times, shape ``t.shape + (basis_dim,)``."""
        deriv = int(deriv)
        if deriv < 0 or deriv > self.order_m - 2:
            raise UnsupportedDerivativeError(
                f"derivative {deriv} unsupported for order {self.order_m} (max {self.order_m - 2})")
        t = np.asarray(t, dtype=float)
        bad = ~((t >= 0.0) & (t <= 1.0))
        if np.any(bad):
            flat = np.flatnonzero(bad.reshape(-1))
            raise DomainError(f"covariate at index {flat[0]} outside [0, 1]")
        # at t = 1 the last polynomial piece is used (left limit)
        return self._bspline(t, nu=deriv)


def basis_eval(basis: SplineBasis, t, deriv=0) -> np.ndarray:
    return basis.evaluate(t, deriv)


def design_matrix(basis: SplineBasis, x) -> np.ndarray:
    """``X[i, j] = N_j(x_i)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 0:
        return np.zeros((0, basis.basis_dim))
    return basis.evaluate(x, 0)


@dataclass(frozen=True, eq=False)
class SplinePosterior:
    basis: SplineBasis
    mean: np.ndarray
    precision_factor: np.ndarray  # lower Cholesky factor of X^T X + ridge I
    sigma2_shape: float
    sigma2_scale: float
    n_obs: int
    ridge: float

    def precision(self) -> np.ndarray:
        L = self.precision_factor
        return L @ L.T

    def coefficient_covariance(self, sigma2: float) -> np.ndarray:
        eye = np.eye(self.mean.size)
        Linv = linalg.solve_triangular(self.precision_factor, eye, lower=True)
        return sigma2 * Linv.T @ Linv


def fit_posterior(basis: SplineBasis, x, y, prior_a: float, prior_b: float, ridge=None) -> SplinePosterior:
    """Conjugate posterior of the spline coefficients and the noise variance.

    ``ridge`` defaults to ``k_n / n^2``, i.e. the prior variance factor
    ``n^2 / k_n``; pass another value to change the prior dispersion.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = x.size
    if n < 1 or y.size != n:
        raise ValueError("need matching, non-empty x and y")
    if not (prior_a > 0 and prior_b > 0):
        raise ValueError("prior_a and prior_b must be positive")
    if ridge is None:
        ridge = basis.kn / n**2
    X = design_matrix(basis, x)
    A = X.T @ X + ridge * np.eye(basis.basis_dim)
    try:
        L = linalg.cholesky(A, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularDesignError(str(exc)) from exc
    Xty = X.T @ y
    mean = linalg.cho_solve((L, True), Xty)
    resid_ss = max(float(y @ y - Xty @ mean), 0.0)
    return SplinePosterior(
        basis=basis,
        mean=mean,
        precision_factor=L,
        sigma2_shape=prior_a + n / 2.0,
        sigma2_scale=prior_b + resid_ss / 2.0,
        n_obs=n,
        ridge=float(ridge),
    )


def sample_sigma2(post: SplinePosterior, rng: np.random.Generator, size=None):
    return sample_inverse_gamma(post.sigma2_shape, post.sigma2_scale, rng, size=size)


def sample_beta(post: SplinePosterior, sigma2, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw(s) from ``N(mean, sigma2 * A^{-1})``.

    With ``size`` given, ``sigma2`` may be an array of one variance per draw
    and the result has shape ``(size, basis_dim)``.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 < 0):
        raise ValueError("sigma2 must be non-negative")
    dim = post.mean.size
    if size is None:
        z = rng.standard_normal(dim)
        # L^T u = z  gives  cov(u) = A^{-1}
        u = linalg.solve_triangular(post.precision_factor, z, lower=True, trans="T")
        return post.mean + np.sqrt(sigma2) * u
    z = rng.standard_normal((dim, int(size)))
    u = linalg.solve_triangular(post.precision_factor, z, lower=True, trans="T")
    return post.mean[None, :] + np.sqrt(sigma2).reshape(-1, 1) * u.T
