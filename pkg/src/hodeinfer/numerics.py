"""Quadrature on [0, 1], box-constrained multistart minimisation, random variates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .errors import OptimizationError

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "golden_section",
    "minimize_box",
    "minimize_scalar_many",
    "sample_inverse_gamma",
    "sample_normal",
    "DEFAULT_QUAD_NODES",
    "DEFAULT_STARTS",
    "DEFAULT_TOL",
]

DEFAULT_QUAD_NODES = 64
DEFAULT_STARTS = 8
DEFAULT_TOL = 1e-8
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> np.ndarray:
        """Weighted sum over the last axis of ``values`` (sampled at ``nodes``)."""
        return np.asarray(values) @ self.weights


def gauss_legendre(n_nodes: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0, 1]; exact to degree ``2 n - 1``."""
    n_nodes = int(n_nodes)
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w)


def _clean(f):
    f = np.asarray(f, dtype=float)
    return np.where(np.isnan(f), np.inf, f)


def _better(f_new, x_new, f_old, x_old):
    # strict improvement, or a tie resolved toward the smaller coordinate
    return (f_new < f_old) | ((f_new == f_old) & (x_new < x_old))


def golden_section(fun: Callable, lo, hi, tol=DEFAULT_TOL, maxiter=500):
    """Vectorised golden-section search on independent brackets.

    ``fun(x, idx)`` evaluates the objective of problems ``idx`` at points
    ``x`` (both 1-d arrays of equal length).  Each bracket ``[lo[i], hi[i]]``
    shrinks until its width is at most ``tol``.  Returns the best evaluated
    point and value per bracket; ties go to the smaller point.
    """
    a = np.array(lo, dtype=float, ndmin=1)
    b = np.array(hi, dtype=float, ndmin=1)
    idx_all = np.arange(a.size)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _clean(fun(c, idx_all))
    fd = _clean(fun(d, idx_all))
    take_d = _better(fd, d, fc, c)
    best_x = np.where(take_d, d, c)
    best_f = np.where(take_d, fd, fc)
    for _ in range(maxiter):
        active = np.flatnonzero(b - a > tol)
        if active.size == 0:
            break
        left = fc[active] <= fd[active]
        ia, ib = active[left], active[~left]
        # keep [a, d]: old c becomes the new d
        b[ia] = d[ia]
        d[ia] = c[ia]
        fd[ia] = fc[ia]
        c[ia] = b[ia] - _INVPHI * (b[ia] - a[ia])
        # keep [c, b]: old d becomes the new c
        a[ib] = c[ib]
        c[ib] = d[ib]
        fc[ib] = fd[ib]
        d[ib] = a[ib] + _INVPHI * (b[ib] - a[ib])
        x_new = np.where(left, c[active], d[active])
        f_new = _clean(fun(x_new, active))
        fc[ia] = f_new[left]
        fd[ib] = f_new[~left]
        upd = _better(f_new, x_new, best_f[active], best_x[active])
        best_x[active[upd]] = x_new[upd]
        best_f[active[upd]] = f_new[upd]
    return best_x, best_f


def _brackets_around_minima(xs, fs, lo, hi):
    # sampled local minima (ties count) and the bracket between their neighbours
    n = xs.size
    out = []
    for i in range(n):
        left_ok = i == 0 or fs[i] <= fs[i - 1]
        right_ok = i == n - 1 or fs[i] <= fs[i + 1]
        if left_ok and right_ok and np.isfinite(fs[i]):
            out.append((i, xs[i - 1] if i > 0 else lo, xs[i + 1] if i < n - 1 else hi))
    return out


def minimize_scalar_many(fun: Callable, lo: float, hi: float, n_problems: int,
                         starts=DEFAULT_STARTS, tol=DEFAULT_TOL):
    """Multistart golden-section search for many 1-d problems at once.

    ``fun(x, idx)`` as in :func:`golden_section`.  Every problem is first
    evaluated at ``starts`` stratum midpoints of ``[lo, hi]``; a golden-section
    search then runs between the neighbours of each sampled local minimum.
    Returns ``(x, f)`` arrays with the best point of each problem.
    """
    starts = int(starts)
    if starts < 1:
        raise ValueError("starts must be >= 1")
    grid = lo + (np.arange(starts) + 0.5) * (hi - lo) / starts
    fgrid = np.empty((n_problems, starts))
    all_idx = np.arange(n_problems)
    for s in range(starts):
        fgrid[:, s] = _clean(fun(np.full(n_problems, grid[s]), all_idx))
    owner, blo, bhi = [], [], []
    for p in range(n_problems):
        for _, a, b in _brackets_around_minima(grid, fgrid[p], lo, hi):
            owner.append(p)
            blo.append(a)
            bhi.append(b)
    owner = np.asarray(owner, dtype=int)
    best_x = np.full(n_problems, np.nan)
    best_f = np.full(n_problems, np.inf)
    # stratum points are candidates too
    for s in range(starts):
        upd = _better(fgrid[:, s], np.full(n_problems, grid[s]), best_f, np.nan_to_num(best_x, nan=np.inf))
        best_x[upd] = grid[s]
        best_f[upd] = fgrid[upd, s]
    if owner.size:
        gx, gf = golden_section(lambda x, k: fun(x, owner[k]), blo, bhi, tol=tol)
        for j in np.argsort(gx, kind="stable"):
            p = owner[j]
            if _better(gf[j], gx[j], best_f[p], best_x[p]):
                best_x[p], best_f[p] = gx[j], gf[j]
    return best_x, best_f


def minimize_box(objective: Callable, box, starts=DEFAULT_STARTS, tol=DEFAULT_TOL, seed=0):
    """Minimise ``objective(theta)`` over an axis-aligned box.

    Golden-section search for one parameter, bounded Nelder-Mead from Latin
    hypercube starts otherwise.  Returns ``(theta_hat, value)``; among equal
    values the lexicographically smallest point wins.
    """
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    p = box.shape[0]
    if int(starts) < 1:
        raise ValueError("starts must be >= 1")
    if p == 1:
        def vec(x, idx):
            return np.array([objective(np.array([xi])) for xi in x])

        x, f = minimize_scalar_many(vec, box[0, 0], box[0, 1], 1, starts=starts, tol=tol)
        if not np.isfinite(f[0]):
            raise OptimizationError("objective was not finite anywhere in the box")
        return np.array([x[0]]), float(f[0])

    def safe(th):
        v = float(objective(np.clip(th, box[:, 0], box[:, 1])))
        return v if np.isfinite(v) else np.inf

    x0s = qmc.scale(qmc.LatinHypercube(d=p, seed=seed).random(int(starts)), box[:, 0], box[:, 1])
    results = []
    for x0 in x0s:
        try:
            res = optimize.minimize(safe, x0, method="Nelder-Mead", bounds=box,
                                    options={"xatol": tol, "fatol": tol, "maxiter": 4000 * p,
                                             "maxfev": 8000 * p})
        except (ValueError, FloatingPointError):
            continue
        if np.isfinite(res.fun):
            results.append((float(res.fun), tuple(np.clip(res.x, box[:, 0], box[:, 1]))))
    if not results:
        raise OptimizationError("all starts failed")
    fbest, xbest = min(results)
    return np.array(xbest), fbest


def sample_inverse_gamma(shape: float, scale: float, rng: np.random.Generator, size=None):
    """Inverse-gamma draw(s) with density proportional to ``x^(-shape-1) exp(-scale/x)``."""
    if not (shape > 0 and scale > 0):
        raise ValueError("shape and scale must be positive")
    return scale / rng.gamma(shape, 1.0, size=size)


def sample_normal(mean: float, sd: float, rng: np.random.Generator, size=None):
    if sd < 0:
        raise ValueError("sd must be non-negative")
    if sd == 0:
        return mean if size is None else np.full(size, float(mean))
    return rng.normal(mean, sd, size=size)
