"""Nonlinear least squares on the numerically solved regression function."""
from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import norm

from .errors import RankDeficiencyError
from .models import OdeSystem
from .numerics import DEFAULT_STARTS, DEFAULT_TOL, minimize_box
from .rk import sensitivity
from .rksb import residual_sum_of_squares

__all__ = ["NlsFit", "fit_nls"]


class NlsFit(NamedTuple):
    theta_hat: np.ndarray
    sigma2_hat: float
    cov_matrix: np.ndarray

    def interval(self, level=0.95, j=0) -> tuple[float, float]:
        """Wald interval from asymptotic normality."""
        z = norm.ppf(0.5 + level / 2.0)
        half = z * np.sqrt(self.cov_matrix[j, j])
        return float(self.theta_hat[j] - half), float(self.theta_hat[j] + half)


def fit_nls(system: OdeSystem, x, y, r_n: Optional[int] = None, starts=DEFAULT_STARTS,
            tol=DEFAULT_TOL) -> NlsFit:
    """Least-squares ``theta`` with covariance ``s^2 (J^T J)^{-1}``, ``s^2 = RSS / (n - p)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, p = x.size, system.param_dim_p
    if n <= p:
        raise ValueError("need more observations than parameters")
    r_n = n if r_n is None else int(r_n)
    theta_hat, rss = minimize_box(lambda th: residual_sum_of_squares(system, x, y, th, r_n),
                                  system.theta_box, starts=starts, tol=tol)
    sigma2_hat = rss / (n - p)
    J = sensitivity(system, theta_hat, r_n, x)
    if np.linalg.matrix_rank(J) < p:
        raise RankDeficiencyError("sensitivity matrix is rank deficient")
    cov = sigma2_hat * np.linalg.inv(J.T @ J)
    return NlsFit(theta_hat, float(sigma2_hat), cov)
