"""Simulation and statistical verification of consensus-learning dynamics.

A small numpy library for discrete-time social-learning models: agents
repeatedly average each other's states through a row-stochastic weights
matrix while receiving feedback toward an external target, a noisy target,
or their own current mean. The package simulates the model families,
checks the hypotheses the convergence guarantees need, and verifies the
predicted limits empirically (consensus points, settling of the state law,
and the scaled rank-one central limit).
"""

from .conditions import (
    ConditionReport,
    check_average_rates,
    check_base_rates,
    check_ll1,
    check_ll1b,
    check_nonlinear_bounds,
    check_product_to_zero,
    nonlinear_rho,
)
from .dynamics import (
    EnsembleSample,
    LearningFunction,
    ModelFamily,
    ModelSpec,
    Trajectory,
    linear_learning,
    scaled_sign_learning,
    scaled_tanh_learning,
    simulate,
    simulate_ensemble,
    step_average,
    step_base,
    step_noisy,
    step_nonlinear,
    step_pure_noise,
)
from .errors import (
    ConsensusLabError,
    InconsistentDeclarationError,
    InsufficientSampleError,
    InvalidWeightError,
    ScenarioFormatError,
    ScheduleError,
    StructureError,
    TableExhaustedError,
)
from .harness import (
    RunSummary,
    Scenario,
    catalog,
    load_catalog_scenario,
    load_scenario,
    model_rho_sequence,
    reproduce,
    run_scenario,
    validate_summary,
)
from .matrices import (
    TOL_ROW,
    RowSumMatrix,
    StochasticMatrix,
    averaging_map,
    consensus_weights,
    contraction_factor,
    dobrushin,
    inf_norm,
    matrix_inf_norm,
    oscillation,
    product_limit,
    weighted_inf_norm,
)
from .noise import NoiseSpec, epsilon_oscillator_sequence, sample_noise, sample_noise_block, substream
from .schedules import Constant, Table, as_schedule, rho_exp_inverse_square, rho_harmonic
from .stats import (
    CLTTarget,
    DriftReport,
    EmpiricalSample,
    cauchy_cdf,
    clt_target,
    consensus_time,
    detect_periodicity,
    distribution_drift,
    empirical_moments,
    ks_critical_value,
    ks_statistic,
    normal_cdf,
    rank_one_score,
    wasserstein1_1d,
)

__version__ = "0.1.0"
