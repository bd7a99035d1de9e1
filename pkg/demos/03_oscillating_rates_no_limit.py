"""When slowly-drifting learning rates defeat convergence in distribution.

A scalar learner updates toward pure noise with a rate that sweeps the band
[1/4, 3/4] in harmonic steps of 1/(10 t). Each individual step changes the
rate by almost nothing, yet the accumulated rate increments are not
summable, and the state law keeps commuting between a wide regime (rate
near 3/4) and a narrow one (rate near 1/4) instead of settling.

Run:  python demos/03_oscillating_rates_no_limit.py
"""

import numpy as np

from consensuslab import (
    ModelSpec,
    NoiseSpec,
    Table,
    check_ll1,
    check_ll1b,
    epsilon_oscillator_sequence,
    model_rho_sequence,
    simulate_ensemble,
    wasserstein1_1d,
)

T = 1000
eps = epsilon_oscillator_sequence(T)
t_hi = int(np.argmax(eps))
t_lo = int(np.argmin(eps))
print(f"rate sweep: eps[{t_hi}] = {eps[t_hi]:.3f} (high), eps[{t_lo}] = {eps[t_lo]:.4f} (low)")

spec = ModelSpec.pure_noise(
    np.ones((1, 1)), Table(eps, t0=0), NoiseSpec.gaussian([0.0], [[1.0]]), [0.0]
)

# the nested-product condition holds for this schedule ...
rho = model_rho_sequence(spec, T)
print("nested-product condition:", check_ll1(rho).satisfied, f"(sup = {check_ll1(rho).witness['sup']:.2f})")
# ... but the increment-summability condition fails
r = check_ll1b(spec.schedule_A, spec.schedule_E, T)
print(f"increment summability: {r.satisfied} (partial sum = {r.witness['partial_sum']:.3f}, grows like ln T / 10)")

ens = simulate_ensemble(spec, T, m=3000, master_seed=5, snapshot_times=[t_hi, t_lo])
hi, lo = ens.snapshots[t_hi][:, 0], ens.snapshots[t_lo][:, 0]
print(f"\nstd at the high-rate time:  {hi.std(ddof=1):.3f}")
print(f"std at the low-rate time:   {lo.std(ddof=1):.3f}")
print(f"transport distance between the two laws: {wasserstein1_1d(hi, lo):.3f}")
print("a settling law would put this near zero; the sweep keeps it bounded away")
