"""Endogenous consensus and the rank-one central limit.

With feedback toward the running mean there is no external target: whatever
the agents agree on is the consensus. The update matrices multiply into a
rank-one limit whose identical rows are the consensus weights. Under
persistent noise the terminal state, centered and scaled by sqrt(T), is
asymptotically normal with a rank-one covariance: the noise only survives
along the consensus direction, so the joint law concentrates on the
diagonal line. The same covariance appears for Gaussian and for +/-1 noise.

Run:  python demos/04_average_dynamics_clt.py
"""

import numpy as np

from consensuslab import (
    ModelSpec,
    NoiseSpec,
    averaging_map,
    check_average_rates,
    clt_target,
    consensus_weights,
    empirical_moments,
    product_limit,
    rank_one_score,
    simulate,
    simulate_ensemble,
)

A = np.array([[0.6, 0.4], [0.3, 0.7]])
eps = np.array([0.4, 0.2])

print("rate window:", check_average_rates(A, eps).satisfied)
B = averaging_map(A, eps)
print("update matrix B =\n", B.entries)

C, converged = product_limit(B, t_max=500, rank_one_tol=1e-12)
nu = consensus_weights(C)
print(f"product limit converged: {converged}; consensus weights nu = {nu}")

# zero noise: exact agreement, value = nu . x0
spec0 = ModelSpec.average(A, eps, NoiseSpec.zero(2), np.array([1.0, 0.0]))
traj = simulate(spec0, 20, seed=0)
print(f"zero-noise consensus value: {traj.states[-1]} (nu . x0 = {nu @ [1.0, 0.0]:.3f})")

# persistent noise: scaled CLT with a rank-one covariance
T, m = 2000, 3000
target = clt_target(C, eps, np.eye(2)).covariance
print("\npredicted covariance of (X_T - mean)/sqrt(T):\n", target)
for label, noise, seed in (
    ("gaussian", NoiseSpec.gaussian(np.zeros(2), np.eye(2)), 303),
    ("rademacher", NoiseSpec.rademacher(2), 305),
):
    ens = simulate_ensemble(ModelSpec.average(A, eps, noise, np.zeros(2)), T, m, seed)
    scaled = (ens.terminal_states - ens.terminal_states.mean(axis=0)) / np.sqrt(T)
    _, emp = empirical_moments(scaled)
    rel = np.max(np.abs(emp - target) / np.abs(target))
    print(
        f"{label:11s} empirical [[{emp[0, 0]:.4f}, {emp[0, 1]:.4f}], [{emp[1, 0]:.4f}, {emp[1, 1]:.4f}]]"
        f"  max rel err {rel:.1%}  rank-one score {rank_one_score(emp):.4f}"
    )

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ens = simulate_ensemble(
        ModelSpec.average(A, eps, NoiseSpec.rademacher(2), np.zeros(2)), T, m, 305
    )
    pts = ens.terminal_states
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(pts[:, 0], pts[:, 1], ".", ms=2, alpha=0.4)
    ax.set_xlabel("agent 1")
    ax.set_ylabel("agent 2")
    ax.set_title("terminal states concentrate on the diagonal")
    fig.tight_layout()
    fig.savefig("demo04_line.png", dpi=120)
    print("wrote demo04_line.png")
except ImportError:
    print("(matplotlib not installed; skipping the plot)")
