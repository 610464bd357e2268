"""Least-squares fit and the large-sample interval length it should attain."""
from hodeinfer import SimConfig, asymptotic_benchmark, fit_nls, generate_dataset, get_model

vdp = get_model("vdp")
bm = asymptotic_benchmark(vdp, [1.0], sigma0=0.1)
print(f"V(theta0) = {bm.V_theta0[0, 0]:.4f}")

for n in (100, 500):
    x, y, _ = generate_dataset(SimConfig(n=n, replications=1), 0)
    fit = fit_nls(vdp, x, y)
    lo, hi = fit.interval(0.95)
    print(f"n={n}: theta_hat {fit.theta_hat[0]:.4f}, sigma_hat {fit.sigma2_hat ** 0.5:.4f}, "
          f"CI length {hi - lo:.3f} (asymptotic {bm.predicted_interval_length(n):.3f})")
