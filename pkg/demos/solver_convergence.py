"""Van der Pol trajectories and the solver's grid-refinement behaviour."""
import numpy as np

from hodeinfer import eval_dense, get_model, observed_order, solve

vdp = get_model("vdp")
sol = solve(vdp, [1.0], 100)
print("Van der Pol, theta=1, r_n=100")
for k in range(0, 101, 20):
    t, (f, df) = sol.grid_points[k], sol.states[k]
    print(f"  t={t:.2f}  f={f: .6f}  f'={df: .6f}")

# between grid nodes the solution is read off a local Taylor expansion
print("f(0.333) =", eval_dense(sol, vdp, 0.333))

harm = get_model("harmonic")
errors = []
for r in (25, 50, 100, 200, 400):
    s = solve(harm, [2.0], r)
    errors.append(np.abs(s.values - np.cos(2 * s.grid_points)).max())
print("\nharmonic oscillator sup errors:", ["%.2e" % e for e in errors])
print("observed orders:", np.round(observed_order(errors), 2))
