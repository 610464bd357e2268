"""B-spline regression posterior for a noisy Van der Pol sample."""
import numpy as np

from hodeinfer import SimConfig, SplineBasis, fit_posterior, generate_dataset, sample_beta, sample_sigma2

x, y, truth = generate_dataset(SimConfig(n=100, replications=1), 0)
basis = SplineBasis(order_m=5, kn=3)
post = fit_posterior(basis, x, y, prior_a=99.0, prior_b=1.0)
print(f"{basis.basis_dim} coefficients, ridge {post.ridge:.2e}")
print(f"sigma^2 posterior: IG({post.sigma2_shape:.1f}, {post.sigma2_scale:.3f}), "
      f"mean {post.sigma2_scale / (post.sigma2_shape - 1):.4f}")

rng = np.random.default_rng(1)
s2 = sample_sigma2(post, rng, size=500)
betas = sample_beta(post, s2, rng, size=500)
t = np.linspace(0, 1, 6)
curves = betas @ basis.evaluate(t).T
print("\n  t    mean   2.5%   97.5%")
for i, ti in enumerate(t):
    lo, hi = np.quantile(curves[:, i], [0.025, 0.975])
    print(f"{ti:4.1f} {curves[:, i].mean():6.3f} {lo:6.3f} {hi:6.3f}")
