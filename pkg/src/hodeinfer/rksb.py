"""Runge-Kutta sieve Bayes: MCMC on (theta, sigma^2) under the approximate likelihood.

The regression function in the Gaussian likelihood is replaced by the
numerical solution ``f_{theta, r_n}``.  Sampling is Metropolis-within-Gibbs:
a random-walk step for ``theta`` under a Gaussian prior truncated to the
parameter box, then an exact inverse-gamma draw of ``sigma^2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import OdeSystem
from .numerics import minimize_box, sample_inverse_gamma
from .rk import predict_many

__all__ = [
    "RksbConfig",
    "PosteriorDraws",
    "log_approx_likelihood",
    "residual_sum_of_squares",
    "run_rksb",
    "equal_tailed_interval",
    "sigma2_conditional",
]

METHODS = ("RKSB", "RKTB", "TS")


def equal_tailed_interval(draws, level=0.95) -> tuple[float, float]:
    """Empirical ``(1-level)/2`` and ``1-(1-level)/2`` quantiles (linear interpolation)."""
    draws = np.asarray(draws, dtype=float).reshape(-1)
    if draws.size == 0:
        raise ValueError("no draws")
    if draws.size < 2:
        raise ValueError("need at least two draws")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


@dataclass
class PosteriorDraws:
    """Posterior sample of ``theta`` (rows) with optional ``sigma^2`` draws."""

    theta_draws: np.ndarray
    sigma2_draws: Optional[np.ndarray]
    method_tag: str
    acceptance_rate: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method_tag not in METHODS:
            raise ValueError(f"method_tag must be one of {METHODS}")
        self.theta_draws = np.atleast_2d(np.asarray(self.theta_draws, dtype=float))

    @property
    def n_draws(self) -> int:
        return self.theta_draws.shape[0]

    def interval(self, level=0.95, j=0):
        return equal_tailed_interval(self.theta_draws[:, j], level)

    def to_csv(self, path):
        cols = [f"theta_{j + 1}" for j in range(self.theta_draws.shape[1])]
        data = self.theta_draws
        if self.sigma2_draws is not None:
            cols.append("sigma2")
            data = np.column_stack([data, self.sigma2_draws])
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="")


@dataclass
class RksbConfig:
    """Priors and sampler settings.  ``r_n=None`` means one grid step per observation."""

    theta_prior_mean: tuple = (6.0,)
    theta_prior_sd: tuple = (4.0,)
    ig_a: float = 99.0
    ig_b: float = 1.0
    r_n: Optional[int] = None
    chain_length: int = 3000
    burn_in: int = 1000
    proposal_sd: tuple = (0.5,)
    adapt: bool = True
    target_accept: float = 0.3
    init_theta: Optional[tuple] = None

    def __post_init__(self):
        self.theta_prior_mean = tuple(float(v) for v in np.atleast_1d(self.theta_prior_mean))
        self.theta_prior_sd = tuple(float(v) for v in np.atleast_1d(self.theta_prior_sd))
        self.proposal_sd = tuple(float(v) for v in np.atleast_1d(self.proposal_sd))
        if not 0 <= self.burn_in < self.chain_length:
            raise ValueError("need 0 <= burn_in < chain_length")
        if min(self.proposal_sd) <= 0 or min(self.theta_prior_sd) <= 0:
            raise ValueError("proposal_sd and theta_prior_sd must be positive")
        if not (self.ig_a > 0 and self.ig_b > 0):
            raise ValueError("ig_a and ig_b must be positive")


def residual_sum_of_squares(system: OdeSystem, x, y, theta, r_n: int) -> float:
    """``sum (y_i - f_{theta, r_n}(x_i))^2``; ``inf`` if the trajectory diverges."""
    vals, status = predict_many(system, np.asarray(theta, dtype=float)[None, :], r_n, x)
    if status[0] != 0:
        return math.inf
    r = np.asarray(y, dtype=float) - vals[0]
    return float(r @ r)


def log_approx_likelihood(system: OdeSystem, x, y, theta, sigma2: float, r_n: int) -> float:
    """Gaussian log-likelihood with the numerical solution as regression function.

    The covariate density term is left out since it does not involve theta.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    n = np.asarray(x).size
    rss = residual_sum_of_squares(system, x, y, np.atleast_1d(theta), r_n)
    if not math.isfinite(rss):
        return -math.inf
    return -0.5 * n * math.log(2.0 * math.pi * sigma2) - rss / (2.0 * sigma2)


def sigma2_conditional(n: int, rss: float, a: float, b: float) -> tuple[float, float]:
    """Shape and scale of the full conditional of ``sigma^2``."""
    return a + n / 2.0, b + rss / 2.0


def run_rksb(system: OdeSystem, x, y, config: RksbConfig, rng: np.random.Generator) -> PosteriorDraws:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = x.size
    if n == 0:
        raise ValueError("empty data")
    p = system.param_dim_p
    r_n = n if config.r_n is None else int(config.r_n)
    mu = np.broadcast_to(np.asarray(config.theta_prior_mean, dtype=float), (p,))
    sd = np.broadcast_to(np.asarray(config.theta_prior_sd, dtype=float), (p,))
    prop_sd = np.broadcast_to(np.asarray(config.proposal_sd, dtype=float), (p,)).copy()

    def log_prior(th):
        if not system.in_box(th):
            return -math.inf
        z = (th - mu) / sd
        return -0.5 * float(z @ z)

    def rss(th):
        return residual_sum_of_squares(system, x, y, th, r_n)

    if config.init_theta is not None:
        theta = np.asarray(config.init_theta, dtype=float).reshape(p)
    else:
        theta, _ = minimize_box(rss, system.theta_box, starts=8, tol=1e-6)
    rss_cur = rss(theta)
    if not math.isfinite(rss_cur):
        raise ValueError("initial theta gives a diverging trajectory")
    sigma2 = max(rss_cur / n, 1e-12)
    lp_cur = log_prior(theta)

    keep = config.chain_length - config.burn_in
    theta_out = np.empty((keep, p))
    sigma2_out = np.empty(keep)
    log_scale = 0.0
    accepted = 0
    for it in range(config.chain_length):
        prop = theta + math.exp(log_scale) * prop_sd * rng.standard_normal(p)
        lp_prop = log_prior(prop)
        log_u = math.log(rng.uniform())
        alpha = 0.0
        if math.isfinite(lp_prop):
            rss_prop = rss(prop)
            if math.isfinite(rss_prop):
                log_r = (lp_prop - rss_prop / (2.0 * sigma2)) - (lp_cur - rss_cur / (2.0 * sigma2))
                alpha = math.exp(min(0.0, log_r))
                if log_u < log_r:
                    theta, rss_cur, lp_cur = prop, rss_prop, lp_prop
                    if it >= config.burn_in:
                        accepted += 1
        if config.adapt and it < config.burn_in:
            log_scale += (it + 1) ** -0.6 * (alpha - config.target_accept)
        shape, scale = sigma2_conditional(n, rss_cur, config.ig_a, config.ig_b)
        sigma2 = float(sample_inverse_gamma(shape, scale, rng))
        if it >= config.burn_in:
            j = it - config.burn_in
            theta_out[j] = theta
            sigma2_out[j] = sigma2

    rate = accepted / keep
    diagnostics = {"final_proposal_sd": (math.exp(log_scale) * prop_sd).tolist(), "r_n": r_n}
    if accepted == 0:
        msg = "RKSB chain accepted no proposals after burn-in; it did not mix"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        diagnostics["mixing_failure"] = msg
    return PosteriorDraws(theta_out, sigma2_out, "RKSB", acceptance_rate=rate, diagnostics=diagnostics)
