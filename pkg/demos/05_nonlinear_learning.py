"""Nonlinear feedback: smooth saturation converges, hard switching cycles.

The fixed-rate feedback generalizes to a componentwise learning function.
A saturating function whose derivative stays pinched between zero and twice
every self-weight still drives the agents to the target. A discontinuous
sign function violates the pinching and locks into a period-2 cycle.

Run:  python demos/05_nonlinear_learning.py
"""

import numpy as np

from consensuslab import (
    ModelSpec,
    check_nonlinear_bounds,
    consensus_time,
    detect_periodicity,
    nonlinear_rho,
    scaled_sign_learning,
    scaled_tanh_learning,
    simulate,
)

A = np.array([[1 / 3, 1 / 3, 1 / 3], [0.5, 0.5, 0.0], [0.0, 0.25, 0.75]])

# saturating feedback, derivative declared over the working interval [-3, 3]
f = scaled_tanh_learning(scale=0.5, bound=3.0)
report = check_nonlinear_bounds(f, lambda t: A, T=50, grid=np.linspace(-3, 3, 1001))
print(
    f"tanh feedback: derivative in [{report.witness['deriv_inf']:.4f}, {report.witness['deriv_sup']:.2f}],"
    f" limit {report.witness['upper_limit']:.3f} -> condition satisfied: {report.satisfied}"
)
print(f"worst-case contraction figure: {nonlinear_rho(f, A):.4f}")

spec = ModelSpec.nonlinear(A, f, np.zeros(3), sigma_bar=1.0)
traj = simulate(spec, 200, seed=0)
print(f"consensus time at tol 1e-6: t = {consensus_time(traj, 1.0, 1e-6)}")

# sign feedback: no derivative to pin, and the trajectory shows why it matters
g = scaled_sign_learning(step=0.4)
spec_sign = ModelSpec.nonlinear(np.ones((1, 1)), g, [2.0], sigma_bar=1.0)
traj_sign = simulate(spec_sign, 40, seed=0)
print("\nsign feedback (scalar, start at 2.0, target 1.0):")
print("X_t tail:", np.round(traj_sign.states[-8:, 0], 6).tolist())
period = detect_periodicity(traj_sign, max_period=6, tol=1e-9)
print(f"detected period: {period} (error flips between +0.2 and -0.2)")
print(f"consensus time: {consensus_time(traj_sign, 1.0, 1e-3)}")
