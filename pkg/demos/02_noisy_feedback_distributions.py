"""Persistent feedback noise: the state law settles, but its shape depends
on the noise.

With decaying noise the agents still learn the target exactly. With
persistent noise the state stops converging pointwise and instead converges
in distribution: Gaussian noise gives a Gaussian limit, +/-1 coin-flip noise
gives a distinctly non-Gaussian one, and Cauchy noise reproduces itself.

Run:  python demos/02_noisy_feedback_distributions.py
"""

import numpy as np

from consensuslab import (
    ModelSpec,
    NoiseSpec,
    cauchy_cdf,
    ks_critical_value,
    ks_statistic,
    normal_cdf,
    simulate,
    simulate_ensemble,
    wasserstein1_1d,
)

A = np.array([[0.7, 0.3], [0.2, 0.8]])
eps = np.array([0.6, 0.5])

# 1. decaying disturbance: pointwise convergence survives
decay = ModelSpec.noisy(A, eps, 1.0, NoiseSpec.decaying(2, rate=0.95), np.zeros(2))
traj = simulate(decay, T=400, seed=0)
print(f"decaying noise: |X_400 - target|_inf = {traj.err_inf[-1]:.2e}")

# 2. persistent noise: compare the law at t=500 and t=1000
m = 3000
for label, noise in (
    ("gaussian", NoiseSpec.gaussian(np.zeros(2), np.eye(2))),
    ("rademacher", NoiseSpec.rademacher(2)),
):
    spec = ModelSpec.noisy(A, eps, 1.0, noise, np.zeros(2))
    ens = simulate_ensemble(spec, 1000, m=m, master_seed=71, snapshot_times=[500, 1000])
    drift = max(
        wasserstein1_1d(ens.snapshots[500][:, j], ens.snapshots[1000][:, j]) for j in range(2)
    )
    x = ens.snapshots[1000][:, 0]
    mu, sd = x.mean(), x.std(ddof=1)
    ks = ks_statistic(x, lambda v: normal_cdf(v, mu, sd))
    crit = ks_critical_value(m, 0.01)
    verdict = "looks Gaussian" if ks < crit else "distinctly non-Gaussian"
    print(
        f"{label:11s} drift(500 -> 1000) = {drift:.4f}; "
        f"KS vs fitted normal = {ks:.4f} (1% critical {crit:.4f}) -> {verdict}"
    )

# 3. heavy tails: Cauchy in, Cauchy out
scalar = ModelSpec.pure_noise(np.ones((1, 1)), [0.5], NoiseSpec.cauchy(1, 1.0), [0.0])
ens = simulate_ensemble(scalar, 200, m=10_000, master_seed=11)
stat = ks_statistic(ens.terminal_states[:, 0], cauchy_cdf)
print(f"cauchy noise: KS of X_200 vs Cauchy(1) = {stat:.4f} (critical {ks_critical_value(10_000, 0.01):.4f})")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for ax, (label, noise) in zip(
        axes,
        (
            ("gaussian noise", NoiseSpec.gaussian(np.zeros(2), np.eye(2))),
            ("+/-1 noise", NoiseSpec.rademacher(2)),
        ),
    ):
        spec = ModelSpec.noisy(A, eps, 1.0, noise, np.zeros(2))
        pts = simulate_ensemble(spec, 1000, m=3000, master_seed=71).terminal_states
        ax.hist(pts[:, 0], bins=80, density=True)
        ax.set_title(label)
    fig.tight_layout()
    fig.savefig("demo02_distributions.png", dpi=120)
    print("wrote demo02_distributions.png")
except ImportError:
    print("(matplotlib not installed; skipping the plot)")
