"""Two-step Bayes through the binding function.

Each spline posterior draw is mapped to
``theta(beta) = argmin_eta int F(t, f, f', ..., f^(q), eta)^2 w(t) dt`` with the
derivatives taken from the spline itself, so no ODE is ever solved.
"""
from __future__ import annotations

import warnings

import numpy as np

from .errors import StudyError, UnsupportedDerivativeError
from .models import OdeSystem
from .numerics import DEFAULT_STARTS, DEFAULT_TOL, gauss_legendre
from .rksb import PosteriorDraws
from .rktb import MAX_DISCARD_FRACTION, _project_draws
from .splines import SplineBasis, fit_posterior, sample_beta, sample_sigma2

__all__ = ["polynomial_weight", "sine_weight", "WEIGHTS", "get_weight", "ts_objective",
           "spline_derivatives", "run_ts", "check_ts_window"]


def polynomial_weight(q: int):
    """``w(t) = t^q (1-t)^q``; it and its first ``q-1`` derivatives vanish at 0 and 1."""
    def w(t):
        t = np.asarray(t, dtype=float)
        return (t * (1.0 - t)) ** q

    return w


def sine_weight(q: int):
    """``w(t) = sin(pi t)^(2q)``."""
    def w(t):
        return np.sin(np.pi * np.asarray(t, dtype=float)) ** (2 * q)

    return w


WEIGHTS = {"poly": polynomial_weight, "sine": sine_weight}


def get_weight(name: str, q: int):
    try:
        return WEIGHTS[name](q)
    except KeyError:
        raise KeyError(f"unknown weight {name!r}; choose from {sorted(WEIGHTS)}") from None


def _check_order(system, basis):
    if basis.order_m < system.order_q + 2:
        raise UnsupportedDerivativeError(
            f"spline order {basis.order_m} too low for a order-{system.order_q} binding function")


def spline_derivatives(basis: SplineBasis, q: int, t) -> np.ndarray:
    """Basis derivative matrices stacked as ``(q+1, len(t), basis_dim)``."""
    return np.stack([basis.evaluate(t, r) for r in range(q + 1)])


def ts_objective(system: OdeSystem, beta, basis: SplineBasis, eta, quad=None, weight_w=None) -> float:
    """Quadrature value of ``int F(t, h(t), eta)^2 w(t) dt`` with ``h`` from the spline."""
    _check_order(system, basis)
    quad = quad or gauss_legendre(64)
    w = weight_w or polynomial_weight(system.order_q)
    h = spline_derivatives(basis, system.order_q, quad.nodes) @ np.asarray(beta, dtype=float)
    F = system.binding_F(quad.nodes, h, np.asarray(eta, dtype=float).reshape(-1))
    return float((F * F) @ (quad.weights * w(quad.nodes)))


def check_ts_window(n: int, m: int, kn: int, q: int) -> list[str]:
    """Warnings for settings outside ``m > 2q+2``, ``n^(1/(2m)) < k_n < n^(1/(4q+4))``."""
    msgs = []
    if m <= 2 * q + 2:
        msgs.append(f"TS asymptotics need m > {2 * q + 2} (got {m})")
    lo, hi = n ** (1.0 / (2 * m)), n ** (1.0 / (4 * q + 4))
    if not lo < kn < hi:
        msgs.append(f"k_n={kn} outside ({lo:.3g}, {hi:.3g}) for n={n}, m={m}, q={q}")
    return msgs


def run_ts(system: OdeSystem, x, y, basis: SplineBasis, prior_a: float, prior_b: float,
           n_draws: int, rng: np.random.Generator, quad=None, weight_w=None,
           starts=DEFAULT_STARTS, tol=DEFAULT_TOL, ridge=None) -> PosteriorDraws:
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size
    if n == 0:
        raise ValueError("empty data")
    _check_order(system, basis)
    q = system.order_q
    for msg in check_ts_window(n, basis.order_m, basis.kn, q):
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    quad = quad or gauss_legendre(64)
    w = weight_w or polynomial_weight(q)
    wq = quad.weights * w(quad.nodes)
    post = fit_posterior(basis, x, y, prior_a, prior_b, ridge=ridge)
    sigma2 = sample_sigma2(post, rng, size=n_draws)
    betas = sample_beta(post, sigma2, rng, size=n_draws)
    # h[r, s, i] = f^(r)(t_i, beta_s)
    h_all = np.einsum("rij,sj->rsi", spline_derivatives(basis, q, quad.nodes), betas)

    def objective_many(eta, idx):
        eta = np.asarray(eta, dtype=float).reshape(len(idx), -1)
        theta = [eta[:, j:j + 1] for j in range(eta.shape[1])]
        F = system.binding_F(quad.nodes, h_all[:, idx, :], theta)
        return (F * F) @ wq

    thetas, ok = _project_draws(objective_many, system, betas, starts, tol)
    discarded = int((~ok).sum())
    if discarded > MAX_DISCARD_FRACTION * n_draws:
        raise StudyError(f"{discarded} of {n_draws} TS projections failed")
    return PosteriorDraws(thetas[ok], sigma2[ok], "TS",
                          diagnostics={"discarded": discarded, "betas": betas[ok]})
