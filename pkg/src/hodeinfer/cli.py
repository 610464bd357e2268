"""Command-line entry point: ``hodeinfer <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import rk
from .models import get_model
from .nls import fit_nls
from .rksb import RksbConfig, run_rksb
from .rktb import run_rktb
from .simulation import PRESETS, SimConfig, preset, run_study
from .splines import SplineBasis
from .ts import WEIGHTS, get_weight, run_ts


def _load_json(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def read_data(path):
    """Read a CSV with header ``x,y``."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names or ()
    if names[:2] != ("x", "y"):
        raise SystemExit(f"{path}: expected header 'x,y', got {','.join(names)}")
    return np.atleast_1d(data["x"]).astype(float), np.atleast_1d(data["y"]).astype(float)


def _theta(args, system):
    if args.theta is None:
        return system.default_theta
    return np.array([float(v) for v in args.theta.split(",")])


def cmd_solve(args):
    system = get_model(args.model)
    sol = rk.solve(system, _theta(args, system), args.rn)
    cols = ["t", "f"] + [f"f_deriv_{j}" for j in range(1, system.order_q)]
    table = np.column_stack([sol.grid_points, sol.states])
    out = args.out or sys.stdout
    np.savetxt(out, table, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def _summary(draws, level):
    lo, hi = draws.interval(level)
    return {
        "method": draws.method_tag,
        "n_draws": draws.n_draws,
        "theta_mean": draws.theta_draws.mean(axis=0).tolist(),
        "theta_sd": draws.theta_draws.std(axis=0, ddof=1).tolist(),
        "interval": [lo, hi],
        "level": level,
        "acceptance_rate": draws.acceptance_rate,
        "discarded": draws.diagnostics.get("discarded", 0),
    }


def _finish(draws, args):
    if args.out:
        draws.to_csv(args.out)
    print(json.dumps(_summary(draws, args.level), indent=2))


def cmd_fit_rksb(args):
    system = get_model(args.model)
    x, y = read_data(args.data)
    cfg = RksbConfig(**_load_json(args.config))
    _finish(run_rksb(system, x, y, cfg, np.random.default_rng(args.seed)), args)


def _spline_args(args, m_default, kn_default):
    cfg = _load_json(args.config)
    m = args.m or cfg.get("order_m", m_default)
    kn = args.kn or cfg.get("kn", kn_default)
    return cfg, SplineBasis(int(m), int(kn))


def cmd_fit_rktb(args):
    system = get_model(args.model)
    x, y = read_data(args.data)
    cfg, basis = _spline_args(args, 5, 3)
    draws = run_rktb(system, x, y, basis, cfg.get("prior_a", 99.0), cfg.get("prior_b", 1.0),
                     cfg.get("r_n", x.size), cfg.get("n_draws", 1000), np.random.default_rng(args.seed))
    _finish(draws, args)


def cmd_fit_ts(args):
    system = get_model(args.model)
    x, y = read_data(args.data)
    cfg, basis = _spline_args(args, 7, 2)
    weight = get_weight(args.weight or cfg.get("weight", "poly"), system.order_q)
    draws = run_ts(system, x, y, basis, cfg.get("prior_a", 99.0), cfg.get("prior_b", 1.0),
                   cfg.get("n_draws", 1000), np.random.default_rng(args.seed), weight_w=weight)
    _finish(draws, args)


def cmd_fit_nls(args):
    system = get_model(args.model)
    x, y = read_data(args.data)
    cfg = _load_json(args.config)
    fit = fit_nls(system, x, y, r_n=cfg.get("r_n"), starts=cfg.get("starts", 8))
    result = {
        "method": "NLS",
        "theta_hat": fit.theta_hat.tolist(),
        "sigma2_hat": fit.sigma2_hat,
        "cov_matrix": fit.cov_matrix.tolist(),
        "interval": list(fit.interval(args.level)),
        "level": args.level,
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result, fh, indent=2)
    print(json.dumps(result, indent=2))


def cmd_simulate(args):
    cfg = preset(args.preset).to_dict() if args.preset else SimConfig().to_dict()
    cfg.update(_load_json(args.config))
    if args.model:
        cfg["model_name"] = args.model
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.replications:
        cfg["replications"] = args.replications
    if args.workers:
        cfg["workers"] = args.workers
    config = SimConfig.from_dict(cfg)

    def progress(done, total):
        print(f"\r{done}/{total}", end="", file=sys.stderr, flush=True)

    report = run_study(config, progress=None if args.quiet else progress)
    if not args.quiet:
        print(file=sys.stderr)
    if args.out:
        report.to_csv(args.out + ".csv")
        report.to_json(args.out + ".json")
    print(report.format_table())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodeinfer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, model="vdp"):
        p.add_argument("--model", default=model, help="vdp, harmonic, null-q<k>, glucose")
        p.add_argument("--seed", type=int, default=None if not data else 0)
        p.add_argument("--out", default=None)
        p.add_argument("--config", default=None, help="JSON file with settings")
        if data:
            p.add_argument("--data", required=True, help="CSV file with header x,y")
            p.add_argument("--level", type=float, default=0.95)

    p = sub.add_parser("solve", help="grid trajectory as CSV")
    common(p, data=False)
    p.add_argument("--theta", default=None, help="comma-separated parameter vector")
    p.add_argument("--rn", type=int, default=100)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fit-rksb", help="Runge-Kutta sieve Bayes")
    common(p)
    p.set_defaults(func=cmd_fit_rksb)

    for name, func in (("fit-rktb", cmd_fit_rktb), ("fit-ts", cmd_fit_ts)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--kn", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        if name == "fit-ts":
            p.add_argument("--weight", choices=sorted(WEIGHTS), default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("fit-nls", help="nonlinear least squares")
    common(p)
    p.set_defaults(func=cmd_fit_nls)

    p = sub.add_parser("simulate", help="coverage / length study")
    common(p, data=False, model=None)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
