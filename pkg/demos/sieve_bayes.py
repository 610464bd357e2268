"""Metropolis-within-Gibbs on the RK-approximated likelihood."""
import numpy as np

from hodeinfer import RksbConfig, SimConfig, generate_dataset, get_model, run_rksb

vdp = get_model("vdp")
x, y, _ = generate_dataset(SimConfig(n=100, replications=1), 0)

config = RksbConfig(theta_prior_mean=6.0, theta_prior_sd=4.0, chain_length=3000, burn_in=1000)
draws = run_rksb(vdp, x, y, config, np.random.default_rng(0))

th = draws.theta_draws[:, 0]
lo, hi = draws.interval(0.95)
print(f"posterior mean {th.mean():.4f}, sd {th.std():.4f}")
print(f"95% interval ({lo:.3f}, {hi:.3f}), length {hi - lo:.3f}")
print(f"acceptance {draws.acceptance_rate:.2f}, sigma^2 median {np.median(draws.sigma2_draws):.4f}")
