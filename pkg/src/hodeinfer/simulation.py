"""Simulation harness: data generation, coverage studies, asymptotic benchmark.

Each replication ``i`` owns the random streams spawned from
``SeedSequence([seed, i])``: child 0 generates the data and child ``k + 1``
drives method ``k`` in :data:`ALL_METHODS` order.  Results therefore do not
depend on how replications are scheduled across workers.
"""
from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.stats import norm

from .errors import StudyError
from .models import OdeSystem, get_model
from .nls import fit_nls
from .numerics import gauss_legendre
from .rk import eval_dense, sensitivity, solve
from .rksb import RksbConfig, run_rksb
from .rktb import run_rktb
from .splines import SplineBasis
from .ts import get_weight, run_ts

__all__ = [
    "ALL_METHODS",
    "SplineSettings",
    "SimConfig",
    "MethodSummary",
    "CoverageReport",
    "AsymptoticBenchmark",
    "PRESETS",
    "preset",
    "generate_dataset",
    "run_replication",
    "run_study",
    "summarize",
    "asymptotic_benchmark",
]

ALL_METHODS = ("RKSB", "RKTB", "TS", "NLS")
MAX_FAILED_FRACTION = 0.10


@dataclass
class SplineSettings:
    order_m: int
    kn: int
    n_draws: int = 1000
    weight: str = "poly"  # TS only


@dataclass
class SimConfig:
    model_name: str = "vdp"
    theta0: tuple = (1.0,)
    sigma0: float = 0.1
    n: int = 100
    replications: int = 200
    level: float = 0.95
    r_n: Optional[int] = None
    r_truth: Optional[int] = None
    seed: int = 20240607
    prior_a: float = 99.0
    prior_b: float = 1.0
    rksb: RksbConfig = field(default_factory=RksbConfig)
    rktb: SplineSettings = field(default_factory=lambda: SplineSettings(5, 3))
    ts: SplineSettings = field(default_factory=lambda: SplineSettings(7, 2))
    nls_starts: int = 8
    methods: tuple = ALL_METHODS
    workers: int = 1
    keep_draws: bool = False

    def __post_init__(self):
        self.theta0 = tuple(float(v) for v in np.atleast_1d(self.theta0))
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.r_truth is not None and self.r_truth < 16 * self.grid_size:
            raise ValueError("r_truth must be at least 16 * r_n")
        if not self.sigma0 >= 0:
            raise ValueError("sigma0 must be non-negative")

    @property
    def grid_size(self) -> int:
        return self.n if self.r_n is None else int(self.r_n)

    @property
    def truth_grid_size(self) -> int:
        return 16 * self.grid_size if self.r_truth is None else int(self.r_truth)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "rksb" in d and isinstance(d["rksb"], dict):
            d["rksb"] = RksbConfig(**d["rksb"])
        for key in ("rktb", "ts"):
            if key in d and isinstance(d[key], dict):
                d[key] = SplineSettings(**d[key])
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**d)


def _reference_config(n, replications, kn_rktb, kn_ts):
    return SimConfig(
        model_name="vdp",
        theta0=(1.0,),
        sigma0=0.1,
        n=n,
        replications=replications,
        rksb=RksbConfig(theta_prior_mean=(6.0,), theta_prior_sd=(4.0,), ig_a=99.0, ig_b=1.0),
        rktb=SplineSettings(order_m=5, kn=kn_rktb, n_draws=1000),
        ts=SplineSettings(order_m=7, kn=kn_ts, n_draws=1000, weight="poly"),
    )


PRESETS = {
    "table2-n100": lambda: _reference_config(100, 200, 3, 2),
    "table2-n500": lambda: _reference_config(500, 100, 4, 3),
}


def preset(name: str) -> SimConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@lru_cache(maxsize=8)
def _truth(model_name: str, theta0: tuple, r_truth: int):
    system = get_model(model_name)
    return system, solve(system, np.array(theta0), r_truth)


def _streams(config: SimConfig, index: int):
    children = np.random.SeedSequence([int(config.seed), int(index)]).spawn(1 + len(ALL_METHODS))
    return [np.random.default_rng(c) for c in children]


def generate_dataset(config: SimConfig, replication_index: int):
    """Uniform covariates and noisy responses around a fine-grid ground truth.

    Returns ``(x, y, truth_solution)``.
    """
    system, truth = _truth(config.model_name, config.theta0, config.truth_grid_size)
    rng = _streams(config, replication_index)[0]
    x = rng.uniform(0.0, 1.0, size=config.n)
    y = eval_dense(truth, system, x) + config.sigma0 * rng.standard_normal(config.n)
    return x, y, truth


def _fit_method(method, system, config, x, y, rng):
    r_n = config.grid_size
    if method == "RKSB":
        cfg = config.rksb
        if cfg.r_n is None:
            cfg = RksbConfig(**{**asdict(cfg), "r_n": r_n})
        return run_rksb(system, x, y, cfg, rng)
    if method == "RKTB":
        s = config.rktb
        return run_rktb(system, x, y, SplineBasis(s.order_m, s.kn), config.prior_a, config.prior_b,
                        r_n, s.n_draws, rng)
    if method == "TS":
        s = config.ts
        return run_ts(system, x, y, SplineBasis(s.order_m, s.kn), config.prior_a, config.prior_b,
                      s.n_draws, rng, weight_w=get_weight(s.weight, system.order_q))
    return fit_nls(system, x, y, r_n=r_n, starts=config.nls_starts)


def run_replication(config: SimConfig, index: int) -> dict:
    """Fit every enabled method on replication ``index``; failures are recorded, not raised."""
    system = get_model(config.model_name)
    x, y, _ = generate_dataset(config, index)
    streams = _streams(config, index)
    record = {"index": index}
    for k, method in enumerate(ALL_METHODS):
        if method not in config.methods:
            continue
        t0 = time.perf_counter()
        entry = {}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                fit = _fit_method(method, system, config, x, y, streams[k + 1])
            lo, hi = fit.interval(config.level, 0)
            entry.update(lo=lo, hi=hi, length=hi - lo, contains=bool(lo <= config.theta0[0] <= hi))
            if method != "NLS":
                entry["discarded"] = int(fit.diagnostics.get("discarded", 0))
                if fit.acceptance_rate is not None:
                    entry["acceptance_rate"] = fit.acceptance_rate
                if config.keep_draws:
                    entry["theta_draws"] = fit.theta_draws[:, 0].copy()
            else:
                entry["theta_hat"] = float(fit.theta_hat[0])
        except Exception as exc:  # a failed replication is excluded from the summary
            entry["error"] = f"{type(exc).__name__}: {exc}"
        entry["seconds"] = time.perf_counter() - t0
        record[method] = entry
    return record


@dataclass
class MethodSummary:
    coverage: float
    coverage_se: float
    mean_length: float
    length_se: float
    n_used: int
    n_failed: int = 0
    discarded_draws: int = 0
    seconds: float = 0.0


def summarize(contained, lengths) -> MethodSummary:
    """Coverage (%) and mean length with Monte Carlo standard errors."""
    c = np.asarray(contained, dtype=float)
    l = np.asarray(lengths, dtype=float)
    R = c.size
    if R == 0 or l.size != R:
        raise ValueError("need equally many, non-zero containment flags and lengths")
    p = c.mean()
    length_sd = l.std(ddof=1) if R > 1 else 0.0
    return MethodSummary(
        coverage=100.0 * p,
        coverage_se=100.0 * math.sqrt(p * (1.0 - p) / R),
        mean_length=float(l.mean()),
        length_se=float(length_sd / math.sqrt(R)),
        n_used=R,
    )


@dataclass
class CoverageReport:
    config: SimConfig
    methods: dict
    records: list = field(repr=False, default_factory=list)
    seconds: float = 0.0

    def rows(self) -> list[dict]:
        return [
            {"method": m, "coverage": s.coverage, "coverage_se": s.coverage_se,
             "length": s.mean_length, "length_se": s.length_se}
            for m, s in self.methods.items()
        ]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["method", "coverage", "coverage_se", "length", "length_se"])
            writer.writeheader()
            writer.writerows(self.rows())

    def to_json(self, path):
        def strip(rec):
            return {m: ({k: v for k, v in e.items() if k != "theta_draws"} if isinstance(e, dict) else e)
                    for m, e in rec.items()}

        payload = {
            "config": self.config.to_dict(),
            "methods": {m: asdict(s) for m, s in self.methods.items()},
            "seconds": self.seconds,
            "replications": [strip(r) for r in self.records],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)

    def format_table(self) -> str:
        lines = [f"{'method':<6} {'coverage':>9} {'(se)':>7} {'length':>8} {'(se)':>7} {'used':>5} {'failed':>6}"]
        for m, s in self.methods.items():
            lines.append(f"{m:<6} {s.coverage:9.1f} {s.coverage_se:7.2f} {s.mean_length:8.3f} "
                         f"{s.length_se:7.3f} {s.n_used:5d} {s.n_failed:6d}")
        return "\n".join(lines)


def _run_one(args):
    config, index = args
    return run_replication(config, index)


def run_study(config: SimConfig, progress=None) -> CoverageReport:
    """Replicate the coverage/length experiment for every enabled method."""
    t0 = time.perf_counter()
    jobs = [(config, i) for i in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_run_one(job))
            if progress is not None:
                progress(len(records), config.replications)
    summaries = {}
    for method in ALL_METHODS:
        if method not in config.methods:
            continue
        good = [r[method] for r in records if "error" not in r[method]]
        failed = config.replications - len(good)
        if failed > MAX_FAILED_FRACTION * config.replications or not good:
            raise StudyError(f"{method}: {failed} of {config.replications} replications failed")
        s = summarize([g["contains"] for g in good], [g["length"] for g in good])
        s.n_failed = failed
        s.discarded_draws = sum(g.get("discarded", 0) for g in good)
        s.seconds = sum(r[method]["seconds"] for r in records)
        summaries[method] = s
    return CoverageReport(config, summaries, records, time.perf_counter() - t0)


@dataclass
class AsymptoticBenchmark:
    """Limiting posterior covariance of ``sqrt(n) (theta - theta0)`` in the well-specified case."""

    V_theta0: np.ndarray
    sigma_theta_block: np.ndarray

    def predicted_interval_length(self, n: int, level=0.95, j=0) -> float:
        z = norm.ppf(0.5 + level / 2.0)
        return float(2.0 * z * math.sqrt(self.sigma_theta_block[j, j] / n))


def asymptotic_benchmark(system: OdeSystem, theta0, sigma0: float, g_density=None, r_n=400,
                         quad=None) -> AsymptoticBenchmark:
    """``V = int fdot^T fdot g dt`` by quadrature and the block ``sigma0^2 V^{-1}``."""
    quad = quad or gauss_legendre(64)
    J = sensitivity(system, theta0, r_n, quad.nodes)  # (nq, p)
    w = quad.weights if g_density is None else quad.weights * np.asarray(g_density(quad.nodes))
    V = (J * w[:, None]).T @ J
    V = 0.5 * (V + V.T)
    if np.linalg.matrix_rank(V) < V.shape[0]:
        raise np.linalg.LinAlgError("V is singular")
    return AsymptoticBenchmark(V, sigma0**2 * np.linalg.inv(V))
