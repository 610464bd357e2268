"""Runge-Kutta two-step Bayes.

Posterior draws of the spline coefficients are mapped to the parameter that
brings the numerical ODE solution closest to the spline in ``L2(g)``:
``theta(beta) = argmin_eta  int (beta^T N(t) - f_{eta, r_n}(t))^2 g(t) dt``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import OptimizationError, StudyError
from .models import OdeSystem
from .numerics import DEFAULT_STARTS, DEFAULT_TOL, gauss_legendre, minimize_box, minimize_scalar_many
from .rk import predict_many
from .rksb import PosteriorDraws
from .splines import SplineBasis, fit_posterior, sample_beta, sample_sigma2

__all__ = ["projection_objective", "run_rktb", "check_rktb_window", "MAX_DISCARD_FRACTION"]

MAX_DISCARD_FRACTION = 0.05


def _density_weights(quad, g_density):
    if g_density is None:
        return quad.weights
    return quad.weights * np.asarray(g_density(quad.nodes), dtype=float)


def projection_objective(system: OdeSystem, beta, basis: SplineBasis, eta, r_n: int,
                         quad=None, g_density=None) -> float:
    """Quadrature value of ``int (f(t, beta) - f_{eta, r_n}(t))^2 g(t) dt``."""
    quad = quad or gauss_legendre(64)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if not system.in_box(eta):
        raise ValueError("eta outside the parameter box")
    spline = basis.evaluate(quad.nodes) @ np.asarray(beta, dtype=float)
    vals, status = predict_many(system, eta[None, :], r_n, quad.nodes)
    if status[0] != 0:
        return math.inf
    d = spline - vals[0]
    return float((d * d) @ _density_weights(quad, g_density))


def check_rktb_window(n: int, m: int, kn: int) -> list[str]:
    """Warnings for spline settings outside ``m >= 3``, ``n^(1/(2m)) < k_n < n^(1/4)``."""
    msgs = []
    if m < 3:
        msgs.append(f"RKTB asymptotics need m >= 3 (got {m})")
    lo, hi = n ** (1.0 / (2 * m)), n ** 0.25
    if not lo < kn < hi:
        msgs.append(f"k_n={kn} outside ({lo:.3g}, {hi:.3g}) for n={n}, m={m}")
    return msgs


def _project_draws(objective_many, system, betas, starts, tol):
    # objective_many(eta_vec, idx) -> values for draws idx
    S = betas.shape[0]
    if system.param_dim_p == 1:
        lo, hi = system.theta_box[0]
        x, f = minimize_scalar_many(objective_many, lo, hi, S, starts=starts, tol=tol)
        return x[:, None], np.isfinite(f)
    thetas = np.full((S, system.param_dim_p), np.nan)
    ok = np.zeros(S, dtype=bool)
    for s in range(S):
        idx = np.array([s])
        try:
            th, val = minimize_box(lambda e: objective_many(e[None, :], idx)[0],
                                   system.theta_box, starts=starts, tol=tol)
        except OptimizationError:
            continue
        thetas[s], ok[s] = th, np.isfinite(val)
    return thetas, ok


def run_rktb(system: OdeSystem, x, y, basis: SplineBasis, prior_a: float, prior_b: float,
             r_n: int, n_draws: int, rng: np.random.Generator, quad=None, g_density=None,
             starts=DEFAULT_STARTS, tol=DEFAULT_TOL, ridge=None) -> PosteriorDraws:
    """Sample ``sigma^2``, then ``beta | sigma^2``, then project each draw onto the ODE family."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size
    if n == 0:
        raise ValueError("empty data")
    for msg in check_rktb_window(n, basis.order_m, basis.kn):
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    quad = quad or gauss_legendre(64)
    wq = _density_weights(quad, g_density)
    post = fit_posterior(basis, x, y, prior_a, prior_b, ridge=ridge)
    sigma2 = sample_sigma2(post, rng, size=n_draws)
    betas = sample_beta(post, sigma2, rng, size=n_draws)
    spline_vals = betas @ basis.evaluate(quad.nodes).T  # (S, nq)

    def objective_many(eta, idx):
        eta = np.asarray(eta, dtype=float).reshape(len(idx), -1)
        vals, status = predict_many(system, eta, r_n, quad.nodes)
        d = spline_vals[idx] - vals
        out = (d * d) @ wq
        out[status != 0] = np.inf
        return out

    thetas, ok = _project_draws(objective_many, system, betas, starts, tol)
    discarded = int((~ok).sum())
    if discarded > MAX_DISCARD_FRACTION * n_draws:
        raise StudyError(f"{discarded} of {n_draws} RKTB projections failed")
    return PosteriorDraws(thetas[ok], sigma2[ok], "RKTB",
                          diagnostics={"discarded": discarded, "r_n": int(r_n), "betas": betas[ok]})
