"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every tolerance is pinned here, not configured elsewhere. The heavier
Monte Carlo criteria share their ensembles through module-scoped fixtures
so the suite stays well inside the stated runtime budgets.
"""

import math
import time

import numpy as np
import pytest

from consensuslab import (
    ModelSpec,
    NoiseSpec,
    Table,
    averaging_map,
    cauchy_cdf,
    check_nonlinear_bounds,
    check_product_to_zero,
    clt_target,
    consensus_time,
    consensus_weights,
    detect_periodicity,
    dobrushin,
    empirical_moments,
    epsilon_oscillator_sequence,
    ks_critical_value,
    ks_statistic,
    nonlinear_rho,
    normal_cdf,
    oscillation,
    product_limit,
    rank_one_score,
    rho_exp_inverse_square,
    rho_harmonic,
    scaled_tanh_learning,
    simulate,
    simulate_ensemble,
    wasserstein1_1d,
)
from property_suites import ALL_SUITES

TRUST3 = np.array([[1 / 3, 1 / 3, 1 / 3], [0.5, 0.5, 0.0], [0.0, 0.25, 0.75]])
RATES3 = np.array([0.3, 0.5, 0.7])
PAIR_A = np.array([[0.6, 0.4], [0.3, 0.7]])
PAIR_EPS = np.array([0.4, 0.2])
MIX_A = np.array([[0.7, 0.3], [0.2, 0.8]])
MIX_EPS = np.array([0.6, 0.5])


@pytest.fixture
def emit(capsys):
    def _emit(k, ok, detail):
        with capsys.disabled():
            print(f"[criterion {k:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, f"criterion {k}: {detail}"

    return _emit


@pytest.fixture(scope="module")
def fixed_schedule_ensembles():
    """Criterion 4 ensembles: fixed weights/rates, Gaussian vs Rademacher."""
    t0 = time.perf_counter()
    out = {}
    for kind, seed in (("gaussian", 71), ("rademacher", 72)):
        noise = (
            NoiseSpec.gaussian(np.zeros(2), np.eye(2))
            if kind == "gaussian"
            else NoiseSpec.rademacher(2)
        )
        spec = ModelSpec.noisy(MIX_A, MIX_EPS, 1.0, noise, np.zeros(2))
        ens = simulate_ensemble(spec, 1000, m=3000, master_seed=seed, snapshot_times=[500, 1000])
        drift = [
            wasserstein1_1d(ens.snapshots[500][:, j], ens.snapshots[1000][:, j]) for j in range(2)
        ]
        ks = []
        for j in range(2):
            x = ens.snapshots[1000][:, j]
            mu, sd = float(x.mean()), float(x.std(ddof=1))
            ks.append(ks_statistic(x, lambda v: normal_cdf(v, mu, sd)))
        out[kind] = {"drift": drift, "ks": ks, "m": 3000}
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_01_base_geometric_convergence(emit):
    spec = ModelSpec.base(TRUST3, RATES3, 1.0, np.zeros(3))
    traj = simulate(spec, 200, seed=2024)
    t = np.arange(201)
    envelope_ok = bool(np.all(traj.err_inf <= 0.7**t + 1e-12))
    ct = consensus_time(traj, 1.0, 1e-6)
    ok = envelope_ok and ct is not None and ct <= 39
    emit(1, ok, f"0.7^t envelope={envelope_ok}, consensus_time={ct} (bound 39)")


def test_criterion_02_product_condition_examples(emit):
    T = 100_000
    r1 = check_product_to_zero(rho_harmonic(T))
    partial = r1.witness["partial_product"]
    harmonic_ok = r1.satisfied and abs(partial * (T + 1) - 1.0) < 1e-10

    r2 = check_product_to_zero(rho_exp_inverse_square(T))
    limit = math.exp(-(math.pi**2) / 6.0)
    exp_ok = (not r2.satisfied) and abs(r2.witness["partial_product"] - limit) < 1e-4
    ok = harmonic_ok and exp_ok
    emit(
        2,
        ok,
        f"harmonic partial*(T+1)-1={partial * (T + 1) - 1:.2e}; "
        f"stalled partial={r2.witness['partial_product']:.6f} vs exp(-pi^2/6)={limit:.6f}",
    )


def test_criterion_03_noisy_convergence(emit):
    t0 = time.perf_counter()
    decay = ModelSpec.noisy(TRUST3, RATES3, 1.0, NoiseSpec.decaying(3, 0.99), np.zeros(3))
    traj = simulate(decay, 2000, seed=7)
    det_ok = bool(traj.err_inf[2000] < 1e-3)

    damped = ModelSpec.noisy(
        TRUST3, RATES3, 1.0,
        NoiseSpec.gaussian(np.zeros(3), np.eye(3), time_scale=lambda t: 1.0 / t),
        np.zeros(3),
    )
    ens = simulate_ensemble(damped, 2000, m=500, master_seed=9003, track_mean_err=True)
    checkpoints = [500, 750, 1000, 1250, 1500, 1750, 2000]
    vals = [float(ens.mean_err_inf[t]) for t in checkpoints]
    monotone = all(b < a for a, b in zip(vals, vals[1:]))
    mc_ok = monotone and vals[-1] < 0.01
    elapsed = time.perf_counter() - t0
    ok = det_ok and mc_ok and elapsed < 10.0
    emit(
        3,
        ok,
        f"deterministic err(2000)={traj.err_inf[2000]:.2e}; ensemble L1 checkpoints "
        f"monotone={monotone}, final={vals[-1]:.4f}; elapsed={elapsed:.1f}s (<10s)",
    )


def test_criterion_04_convergence_in_distribution(emit, fixed_schedule_ensembles):
    res = fixed_schedule_ensembles
    crit = ks_critical_value(res["gaussian"]["m"], 0.01)
    g_drift = max(res["gaussian"]["drift"])
    r_drift = max(res["rademacher"]["drift"])
    r_ks = min(res["rademacher"]["ks"])
    ok = (
        g_drift < 0.05
        and r_drift < 0.05
        and r_ks > crit
        and res["elapsed"] < 60.0
    )
    emit(
        4,
        ok,
        f"gaussian drift={g_drift:.4f}, rademacher drift={r_drift:.4f} (<0.05); "
        f"rademacher KS vs fitted normal={r_ks:.4f} > critical {crit:.4f}; "
        f"elapsed={res['elapsed']:.1f}s (<60s)",
    )


def test_criterion_05_oscillator_non_convergence(emit, fixed_schedule_ensembles):
    eps = epsilon_oscillator_sequence(1000)
    t_hi, t_lo = 6, 918  # first sweep extremes: eps ~ 0.745 and ~ 0.250
    assert eps[t_hi] > 0.74 and eps[t_lo] < 0.26
    spec = ModelSpec.pure_noise(
        np.ones((1, 1)), Table(eps, t0=0), NoiseSpec.gaussian([0.0], [[1.0]]), [0.0]
    )
    ens = simulate_ensemble(spec, 1000, m=3000, master_seed=5, snapshot_times=[t_hi, t_lo])
    drift = wasserstein1_1d(ens.snapshots[t_hi][:, 0], ens.snapshots[t_lo][:, 0])
    reference = max(fixed_schedule_ensembles["gaussian"]["drift"])
    ok = drift > 5.0 * reference
    emit(5, ok, f"subsequence drift={drift:.4f} > 5 x fixed-schedule drift {reference:.4f}")


def test_criterion_06_cauchy_invariance(emit):
    spec = ModelSpec.pure_noise(np.ones((1, 1)), [0.5], NoiseSpec.cauchy(1, 1.0), [0.0])
    ens = simulate_ensemble(spec, 200, m=10_000, master_seed=11)
    stat = ks_statistic(ens.terminal_states[:, 0], cauchy_cdf)
    crit = ks_critical_value(10_000, 0.01)
    ok = stat < crit
    emit(6, ok, f"KS vs Cauchy(1)={stat:.5f} < critical {crit:.5f} at t=200, m=10^4")


def test_criterion_07_signum_periodicity(emit):
    from consensuslab import scaled_sign_learning

    spec = ModelSpec.nonlinear(np.ones((1, 1)), scaled_sign_learning(0.4), [2.0], sigma_bar=1.0)
    traj = simulate(spec, 60, seed=1)
    period = detect_periodicity(traj, max_period=6, tol=1e-9)
    cycle = np.sort(np.unique(traj.states[-6:, 0])) - 1.0
    cycle_ok = cycle.shape == (2,) and np.allclose(cycle, [-0.2, 0.2], atol=1e-12)
    ok = period == 2 and cycle_ok
    emit(7, ok, f"period={period}, error cycle={np.round(cycle, 12).tolist()}")


def test_criterion_08_nonlinear_consensus(emit):
    f = scaled_tanh_learning(0.5, bound=3.0)
    report = check_nonlinear_bounds(
        f, lambda t: TRUST3, T=100, grid=np.linspace(-3, 3, 1001)
    )
    rho = nonlinear_rho(f, TRUST3)
    spec = ModelSpec.nonlinear(TRUST3, f, np.zeros(3), sigma_bar=1.0)
    traj = simulate(spec, 500, seed=1)
    ct = consensus_time(traj, 1.0, 1e-6)
    contract_ok = True
    for t in range(1, 501):
        if traj.err_inf[t] > rho * traj.err_inf[t - 1] + 1e-12:
            contract_ok = False
            break
    ok = report.satisfied and ct is not None and contract_ok
    emit(
        8,
        ok,
        f"bounds satisfied={report.satisfied}, consensus_time={ct}, "
        f"per-step contraction at rho={rho:.4f}: {contract_ok}",
    )


def test_criterion_09_average_fixed_case(emit):
    b = averaging_map(PAIR_A, PAIR_EPS)
    c, converged = product_limit(b, t_max=500, rank_one_tol=1e-10)
    row_gap = 2.0 * dobrushin(c.entries)
    nu = consensus_weights(c)
    nu_resid = float(np.max(np.abs(nu @ b.entries - nu)))
    spec = ModelSpec.average(PAIR_A, PAIR_EPS, NoiseSpec.zero(2), np.array([1.0, 0.0]))
    traj = simulate(spec, 50, seed=1)
    osc_final = oscillation(traj.states[-1])
    delta = dobrushin(b.entries)
    decay_ok = True
    for t in range(1, 51):
        if traj.osc[t] > delta * traj.osc[t - 1] + 1e-12:
            decay_ok = False
            break
    ok = converged and row_gap < 1e-10 and nu_resid < 1e-8 and osc_final < 1e-9 and decay_ok
    emit(
        9,
        ok,
        f"converged={converged}, row gap={row_gap:.1e}, nu residual={nu_resid:.1e}, "
        f"final osc={osc_final:.1e}, per-step decay at delta={delta:.2g}: {decay_ok}",
    )


def test_criterion_10_average_clt(emit):
    t0 = time.perf_counter()
    b = averaging_map(PAIR_A, PAIR_EPS)
    c, _ = product_limit(b, t_max=2000, rank_one_tol=1e-12)
    target = clt_target(c, PAIR_EPS, np.eye(2)).covariance

    results = {}
    for kind, seed in (("gaussian", 303), ("rademacher", 305)):
        noise = (
            NoiseSpec.gaussian(np.zeros(2), np.eye(2))
            if kind == "gaussian"
            else NoiseSpec.rademacher(2)
        )
        spec = ModelSpec.average(PAIR_A, PAIR_EPS, noise, np.zeros(2))
        ens = simulate_ensemble(spec, 2000, m=3000, master_seed=seed)
        pts = ens.terminal_states
        scaled = (pts - pts.mean(axis=0)) / np.sqrt(2000.0)
        _, emp = empirical_moments(scaled)
        rel = float(np.max(np.abs(emp - target) / np.abs(target)))
        score = rank_one_score(emp)
        results[kind] = (rel, score)
    elapsed = time.perf_counter() - t0
    ok = all(rel <= 0.15 and score < 0.05 for rel, score in results.values()) and elapsed < 300.0
    emit(
        10,
        ok,
        "T=2000, m=3000; "
        + "; ".join(
            f"{k}: rel_err={rel:.4f} (<=0.15), rank_one={score:.4f} (<0.05)"
            for k, (rel, score) in results.items()
        )
        + f"; elapsed={elapsed:.1f}s (<300s)",
    )


def test_criterion_11_invariant_suites(emit):
    failures = []
    for suite in ALL_SUITES:
        try:
            suite()
        except AssertionError as exc:
            failures.append(f"{suite.__name__}: {exc}")
    ok = not failures
    emit(11, ok, f"{len(ALL_SUITES)} randomized suites, >=10^3 cases each" +
         ("" if ok else "; failed: " + "; ".join(failures)))
