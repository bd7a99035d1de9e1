"""Target feedback with fixed weights: geometric convergence in the sup norm.

Three agents average each other's quotes through a fixed trust matrix while
nudging toward an external reference value. As long as each learning rate
sits strictly inside (0, 2 * self-weight), the worst-case error contracts by
a fixed factor every round.

Run:  python demos/01_base_model_convergence.py
"""

import numpy as np

from consensuslab import (
    ModelSpec,
    check_base_rates,
    consensus_time,
    contraction_factor,
    simulate,
)

A = np.array([[1 / 3, 1 / 3, 1 / 3], [0.5, 0.5, 0.0], [0.0, 0.25, 0.75]])
eps = np.array([0.3, 0.5, 0.7])
target = 1.0

report = check_base_rates(A, eps)
rho = contraction_factor(A, eps)
print(f"rate window satisfied: {report.satisfied}   contraction factor rho = {rho:.3f}")

spec = ModelSpec.base(A, eps, target, x0=np.zeros(3))
traj = simulate(spec, T=60, seed=0)

print("\n  t   state                                   |err|_inf    rho^t bound")
for t in (0, 1, 2, 5, 10, 20, 40, 60):
    state = np.array2string(traj.states[t], precision=6, suppress_small=True)
    print(f"{t:4d}  {state:40s} {traj.err_inf[t]:.3e}   {rho**t:.3e}")

t_star = consensus_time(traj, target, tol=1e-6)
print(f"\nfirst time within 1e-6 of the target: t = {t_star}")
print(f"envelope bound ceil(ln 1e-6 / ln {rho}) = {int(np.ceil(np.log(1e-6) / np.log(rho)))}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(traj.err_inf, label="|X_t - target|_inf")
    ax.semilogy(rho ** np.arange(61), "--", label=f"{rho:.2f}^t envelope")
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demo01_convergence.png", dpi=120)
    print("wrote demo01_convergence.png")
except ImportError:
    print("(matplotlib not installed; skipping the plot)")
