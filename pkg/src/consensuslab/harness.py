"""Scenario ingestion, the reproducible-case catalog, and run orchestration.

Scenarios are JSON documents validated against the packaged schema
(``schemas/scenario.schema.json``, ``schema_version`` 1). A run executes
the requested hypothesis checks, simulates the model, applies the
requested analyses, and persists three artifacts: a trajectory CSV, an
ensemble CSV, and a summary JSON. Everything is a pure function of the
scenario plus its master seed, so re-running reproduces the CSV bytes.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import jsonschema

from . import conditions as cond
from . import stats as st
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
)
from .errors import ScenarioFormatError
from .matrices import averaging_map, contraction_factor, dobrushin, entries_of, oscillation, product_limit
from .noise import NoiseSpec, epsilon_oscillator_sequence
from .schedules import Constant, Table, rho_exp_inverse_square, rho_harmonic

SCHEMA_VERSION = 1

_KNOWN_CHECKS = ("base_rates", "average_rates", "product_to_zero", "ll1", "ll1b", "nonlinear_bounds")
_KNOWN_ANALYSES = (
    "consensus_time",
    "periodicity",
    "moments",
    "ks",
    "ks_best_fit_normal",
    "drift",
    "clt_check",
    "rank_one",
    "product_limit",
    "oscillation_final",
    "mean_error_checkpoints",
)
_SCHEDULE_KINDS = ("constant", "table", "epsilon_oscillator")
_RHO_KINDS = ("model", "constant", "table", "harmonic", "exp_inverse_square")
_TIME_SCALE_KINDS = ("constant", "inverse_t", "geometric")
_LEARNING_KINDS = ("linear", "scaled_tanh", "scaled_sign")


def _load_schema(name: str) -> dict:
    path = resources.files("consensuslab") / "schemas" / name
    return json.loads(path.read_text())


_SCENARIO_SCHEMA = _load_schema("scenario.schema.json")
_SUMMARY_SCHEMA = _load_schema("summary.schema.json")


@dataclass(eq=False)
class Scenario:
    """A validated, compiled scenario ready to run."""

    scenario_id: str
    model: Optional[ModelSpec]
    horizon: int
    ensemble: int
    master_seed: int
    snapshot_times: tuple
    checks: list
    analyses: list
    outputs_dir: Optional[str]
    description: str = ""
    raw: dict = field(default_factory=dict)


def _compile_time_scale(doc: Optional[dict]):
    if doc is None:
        return None
    kind = doc.get("kind")
    if kind == "constant":
        v = float(doc.get("value", 1.0))
        return lambda t: v
    if kind == "inverse_t":
        return lambda t: 1.0 / t
    if kind == "geometric":
        r = float(doc["rate"])
        return lambda t: r**t
    raise ScenarioFormatError(f"unknown time_scale kind {kind!r}; known: {_TIME_SCALE_KINDS}")


def _compile_noise(doc: Optional[dict], n: int) -> NoiseSpec:
    if doc is None:
        return NoiseSpec.zero(n)
    kind = doc.get("kind")
    ts = _compile_time_scale(doc.get("time_scale"))
    if kind == "zero":
        return NoiseSpec.zero(n)
    if kind == "decaying":
        return NoiseSpec.decaying(n, rate=float(doc["rate"]))
    if kind == "gaussian":
        mu = doc.get("mu", [0.0] * n)
        sigma = doc.get("sigma", np.eye(n).tolist())
        return NoiseSpec.gaussian(mu, sigma, time_scale=ts)
    if kind == "rademacher":
        return NoiseSpec.rademacher(n, time_scale=ts)
    if kind == "cauchy":
        return NoiseSpec.cauchy(n, scale=float(doc.get("scale", 1.0)), time_scale=ts)
    if kind == "custom":
        return NoiseSpec.custom(doc["table"])
    raise ScenarioFormatError(f"unknown noise kind {kind!r}")


def _compile_learning_fn(doc: dict) -> LearningFunction:
    kind = doc.get("kind")
    if kind == "linear":
        return linear_learning(float(doc["slope"]))
    if kind == "scaled_tanh":
        return scaled_tanh_learning(float(doc.get("scale", 0.5)), float(doc.get("bound", 3.0)))
    if kind == "scaled_sign":
        return scaled_sign_learning(float(doc["step"]))
    raise ScenarioFormatError(f"unknown learning_fn kind {kind!r}; known: {_LEARNING_KINDS}")


def _compile_matrix_schedule(doc: dict, pointer: str):
    kind = doc.get("kind")
    if kind == "constant":
        if "matrix" not in doc:
            raise ScenarioFormatError("constant weights schedule needs a 'matrix'", pointer)
        return Constant(np.asarray(doc["matrix"], dtype=float))
    if kind == "table":
        mats = doc.get("matrices")
        if not mats:
            raise ScenarioFormatError("table weights schedule needs 'matrices'", pointer)
        return Table([np.asarray(m, dtype=float) for m in mats], t0=0)
    raise ScenarioFormatError(
        f"unknown weights-schedule kind {kind!r}; known for A: ('constant', 'table')", pointer
    )


def _compile_rate_schedule(doc: dict, horizon: int, pointer: str):
    kind = doc.get("kind")
    if kind == "constant":
        if "eps" not in doc and "value" not in doc:
            raise ScenarioFormatError("constant rate schedule needs 'eps'", pointer)
        return Constant(np.asarray(doc.get("eps", doc.get("value")), dtype=float))
    if kind == "table":
        vals = doc.get("values")
        if not vals:
            raise ScenarioFormatError("table rate schedule needs 'values'", pointer)
        return Table([np.asarray(v, dtype=float) for v in vals], t0=0)
    if kind == "epsilon_oscillator":
        return Table(epsilon_oscillator_sequence(max(horizon, 1)), t0=0)
    raise ScenarioFormatError(
        f"unknown rate-schedule kind {kind!r}; known: {_SCHEDULE_KINDS}", pointer
    )


def _compile_model(doc: Optional[dict], horizon: int) -> Optional[ModelSpec]:
    if doc is None:
        return None
    family = ModelFamily(doc["family"])
    n = int(doc["n"])
    x0 = np.asarray(doc["x0"], dtype=float)
    schedule_A = _compile_matrix_schedule(doc["A"], "/model/A")
    noise = _compile_noise(doc.get("noise"), n)
    sigma_bar = doc.get("sigma_bar")
    kwargs: dict = {}
    if family is ModelFamily.NONLINEAR:
        if "learning_fn" not in doc:
            raise ScenarioFormatError("nonlinear model needs 'learning_fn'", "/model")
        kwargs["learning_fn"] = _compile_learning_fn(doc["learning_fn"])
        kwargs["include_target"] = sigma_bar is not None
    else:
        if "E" not in doc:
            raise ScenarioFormatError("model needs a rate schedule 'E'", "/model")
        kwargs["schedule_E"] = _compile_rate_schedule(doc["E"], horizon, "/model/E")
    try:
        return ModelSpec(
            family=family,
            n=n,
            schedule_A=schedule_A,
            x0=x0,
            sigma_bar=sigma_bar,
            noise=noise,
            **kwargs,
        )
    except ValueError as exc:
        raise ScenarioFormatError(f"invalid model: {exc}", "/model") from exc


def load_scenario(source) -> Scenario:
    """Parse and validate a scenario from a path, JSON text, or dict.

    Schema violations surface as ``ScenarioFormatError`` carrying a JSON
    pointer to the offending field; unknown check, analysis, or generator
    names list the known ones.
    """
    if isinstance(source, dict):
        doc = source
    else:
        p = Path(source)
        if p.exists():
            text = p.read_text()
        else:
            text = str(source)
            if not text.lstrip().startswith("{"):
                raise ScenarioFormatError(f"scenario file not found: {source}")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"not valid JSON: {exc}") from exc

    validator = jsonschema.Draft7Validator(_SCENARIO_SCHEMA)
    errors = list(validator.iter_errors(doc))
    if errors:
        e = jsonschema.exceptions.best_match(errors)
        pointer = "/" + "/".join(str(x) for x in e.absolute_path)
        raise ScenarioFormatError(f"schema violation: {e.message}", pointer)

    horizon = int(doc.get("horizon", 100))
    ensemble = int(doc.get("ensemble", 1))
    master_seed = int(doc.get("master_seed", 0))
    checks = [dict(c) for c in doc.get("checks", [])]
    analyses = [dict(a) for a in doc.get("analyses", [])]
    for c in checks:
        if c["name"] not in _KNOWN_CHECKS:
            raise ScenarioFormatError(f"unknown check {c['name']!r}; known: {_KNOWN_CHECKS}", "/checks")
    for a in analyses:
        if a["name"] not in _KNOWN_ANALYSES:
            raise ScenarioFormatError(f"unknown analysis {a['name']!r}; known: {_KNOWN_ANALYSES}", "/analyses")

    model = _compile_model(doc.get("model"), horizon)
    snapshot_times = tuple(int(t) for t in doc.get("snapshot_times", []))
    return Scenario(
        scenario_id=doc["id"],
        model=model,
        horizon=horizon,
        ensemble=ensemble,
        master_seed=master_seed,
        snapshot_times=snapshot_times,
        checks=checks,
        analyses=analyses,
        outputs_dir=doc.get("outputs", {}).get("dir"),
        description=doc.get("description", ""),
        raw=doc,
    )


def model_rho_sequence(spec: ModelSpec, T: int) -> np.ndarray:
    """Per-step contraction figures implied by a model's schedules."""
    out = np.empty(T)
    for t in range(1, T + 1):
        a = entries_of(spec.schedule_A(t))
        if spec.family is ModelFamily.AVERAGE:
            e = np.asarray(spec.schedule_E(t), dtype=float)
            out[t - 1] = dobrushin(averaging_map(a, e).entries)
        elif spec.family is ModelFamily.NONLINEAR:
            f = spec.learning_fn
            out[t - 1] = cond.nonlinear_rho(f, a)
        else:
            e = np.atleast_1d(np.asarray(spec.schedule_E(t), dtype=float))
            if e.shape == (1,) and spec.n > 1:
                e = np.full(spec.n, e[0])
            out[t - 1] = contraction_factor(a, e)
    return out


def _rho_from_spec(doc: dict, scenario: Scenario, T: int) -> np.ndarray:
    kind = doc.get("kind", "model")
    if kind == "model":
        if scenario.model is None:
            raise ScenarioFormatError("rho kind 'model' needs a model in the scenario")
        return model_rho_sequence(scenario.model, T)
    if kind == "harmonic":
        return rho_harmonic(T)
    if kind == "exp_inverse_square":
        return rho_exp_inverse_square(T)
    if kind == "constant":
        return np.full(T, float(doc["value"]))
    if kind == "table":
        return np.asarray(doc["values"], dtype=float)[:T]
    raise ScenarioFormatError(f"unknown rho kind {kind!r}; known: {_RHO_KINDS}")


# ---------------------------------------------------------------------------
# Checks


def _model_at_t1(scenario: Scenario):
    spec = scenario.model
    if spec is None:
        raise ScenarioFormatError("this check needs a model in the scenario")
    a = entries_of(spec.schedule_A(1))
    e = None
    if spec.schedule_E is not None:
        e = np.atleast_1d(np.asarray(spec.schedule_E(1), dtype=float))
        if e.shape == (1,) and spec.n > 1:
            e = np.full(spec.n, e[0])
    return spec, a, e


def _check_base_rates(scenario: Scenario, params: dict) -> cond.ConditionReport:
    _, a, e = _model_at_t1(scenario)
    return cond.check_base_rates(a, e, beta=params.get("beta"), delta=params.get("delta"))


def _check_average_rates(scenario: Scenario, params: dict) -> cond.ConditionReport:
    _, a, e = _model_at_t1(scenario)
    return cond.check_average_rates(a, e, strict=bool(params.get("strict", True)))


def _check_product_to_zero(scenario: Scenario, params: dict) -> cond.ConditionReport:
    T = int(params.get("T", scenario.horizon))
    rho = _rho_from_spec(params.get("rho", {"kind": "model"}), scenario, T)
    return cond.check_product_to_zero(
        rho,
        product_tol=float(params.get("product_tol", cond.PRODUCT_TOL)),
        decrement_tol=float(params.get("decrement_tol", cond.LOG_DECREMENT_TOL)),
    )


def _check_ll1(scenario: Scenario, params: dict) -> cond.ConditionReport:
    T = int(params.get("T", scenario.horizon))
    rho = _rho_from_spec(params.get("rho", {"kind": "model"}), scenario, T)
    return cond.check_ll1(
        rho,
        sup_bound=float(params.get("sup_bound", cond.SUP_BOUND)),
        growth_frac=float(params.get("growth_frac", cond.GROWTH_FRAC)),
    )


def _check_ll1b(scenario: Scenario, params: dict) -> cond.ConditionReport:
    spec = scenario.model
    if spec is None or spec.schedule_E is None:
        raise ScenarioFormatError("ll1b needs a model with rate schedules")
    T = int(params.get("T", scenario.horizon))
    return cond.check_ll1b(
        spec.schedule_A,
        spec.schedule_E,
        T,
        summability_tol=float(params.get("summability_tol", cond.SUMMABILITY_TOL)),
    )


def _check_nonlinear_bounds(scenario: Scenario, params: dict) -> cond.ConditionReport:
    spec = scenario.model
    if spec is None or spec.family is not ModelFamily.NONLINEAR:
        raise ScenarioFormatError("nonlinear_bounds needs a nonlinear model")
    grid = params.get("grid")
    if grid is not None and len(grid) == 3:
        grid = np.linspace(float(grid[0]), float(grid[1]), int(grid[2]))
    T = int(params.get("T", min(scenario.horizon, 100) or 1))
    return cond.check_nonlinear_bounds(spec.learning_fn, spec.schedule_A, T, grid=grid)


_CHECKS: dict[str, Callable] = {
    "base_rates": _check_base_rates,
    "average_rates": _check_average_rates,
    "product_to_zero": _check_product_to_zero,
    "ll1": _check_ll1,
    "ll1b": _check_ll1b,
    "nonlinear_bounds": _check_nonlinear_bounds,
}


# ---------------------------------------------------------------------------
# Analyses


@dataclass(eq=False)
class RunContext:
    scenario: Scenario
    trajectory: Optional[Trajectory]
    ensemble: Optional[EnsembleSample]


def _resolve_target(params: dict, scenario: Scenario):
    target = params.get("target", "sigma_bar")
    if target == "sigma_bar":
        return scenario.model.sigma_bar if scenario.model else None
    return target


def _an_consensus_time(ctx: RunContext, params: dict) -> dict:
    t = st.consensus_time(ctx.trajectory, _resolve_target(params, ctx.scenario), float(params["tol"]))
    return {"time": t, "tol": float(params["tol"])}


def _an_periodicity(ctx: RunContext, params: dict) -> dict:
    p = st.detect_periodicity(ctx.trajectory, int(params["max_period"]), float(params["tol"]))
    return {"period": p}


def _ens_points(ctx: RunContext, params: dict) -> np.ndarray:
    at = params.get("at")
    if at is None or int(at) == ctx.ensemble.t_final:
        return ctx.ensemble.terminal_states
    return ctx.ensemble.snapshots[int(at)]


def _an_moments(ctx: RunContext, params: dict) -> dict:
    mean, cov = st.empirical_moments(_ens_points(ctx, params))
    return {"mean": mean.tolist(), "cov": cov.tolist()}


def _an_ks(ctx: RunContext, params: dict) -> dict:
    pts = _ens_points(ctx, params)
    coord = int(params.get("coordinate", 0))
    dist = params.get("dist", "cauchy")
    if dist == "cauchy":
        scale = float(params.get("scale", 1.0))
        cdf = lambda x: st.cauchy_cdf(x, scale)
    elif dist == "normal":
        cdf = lambda x: st.normal_cdf(x, float(params.get("mu", 0.0)), float(params.get("sigma", 1.0)))
    else:
        raise ScenarioFormatError(f"unknown reference dist {dist!r}; known: ('cauchy', 'normal')")
    stat = st.ks_statistic(pts[:, coord], cdf)
    level = float(params.get("level", 0.01))
    crit = st.ks_critical_value(pts.shape[0], level)
    return {"statistic": stat, "critical": crit, "level": level, "below_critical": bool(stat < crit)}


def _an_ks_best_fit_normal(ctx: RunContext, params: dict) -> dict:
    pts = _ens_points(ctx, params)
    m = pts.shape[0]
    level = float(params.get("level", 0.01))
    crit = st.ks_critical_value(m, level)
    per = []
    for j in range(pts.shape[1]):
        x = pts[:, j]
        mu, sd = float(x.mean()), float(x.std(ddof=1))
        stat = st.ks_statistic(x, lambda v: st.normal_cdf(v, mu, sd))
        per.append({"coordinate": j, "statistic": stat, "exceeds_critical": bool(stat > crit)})
    return {"critical": crit, "level": level, "per_coordinate": per}


def _an_drift(ctx: RunContext, params: dict) -> dict:
    times = [int(t) for t in params["times"]]
    samples = {}
    for t in times:
        pts = ctx.ensemble.terminal_states if t == ctx.ensemble.t_final else ctx.ensemble.snapshots[t]
        samples[t] = st.EmpiricalSample(pts, t_final=t)
    report = st.distribution_drift(samples, decay_ratio=float(params.get("decay_ratio", 0.5)))
    out = report.to_json()
    out["max_distance"] = report.max_distance()
    return out


def _constant_model_pieces(ctx: RunContext):
    spec = ctx.scenario.model
    if spec is None or not isinstance(spec.schedule_A, Constant) or not isinstance(spec.schedule_E, Constant):
        raise ScenarioFormatError("this analysis needs constant A and E schedules")
    a = entries_of(spec.schedule_A(1))
    e = np.asarray(spec.schedule_E(1), dtype=float)
    return spec, a, e


def _an_clt_check(ctx: RunContext, params: dict) -> dict:
    spec, a, e = _constant_model_pieces(ctx)
    if spec.family is not ModelFamily.AVERAGE:
        raise ScenarioFormatError("clt_check applies to the average family")
    if spec.noise.kind == "gaussian":
        sigma = spec.noise.sigma
    elif spec.noise.kind == "rademacher":
        sigma = np.eye(spec.n)
    else:
        raise ScenarioFormatError("clt_check needs gaussian or rademacher noise")
    b = averaging_map(a, e)
    c, converged = product_limit(b, t_max=int(params.get("product_t_max", 4 * ctx.scenario.horizon)),
                                 rank_one_tol=float(params.get("rank_one_tol", 1e-10)))
    target = st.clt_target(c, e, sigma)
    ens = ctx.ensemble
    pts = ens.terminal_states
    scaled = (pts - pts.mean(axis=0)) / np.sqrt(ens.t_final)
    _, emp = st.empirical_moments(scaled)
    rel = np.abs(emp - target.covariance) / np.abs(target.covariance)
    score = st.rank_one_score(emp)
    rel_tol = float(params.get("rel_tol", 0.15))
    score_tol = float(params.get("score_tol", 0.05))
    return {
        "product_converged": bool(converged),
        "target_cov": target.covariance.tolist(),
        "empirical_cov": emp.tolist(),
        "max_rel_err": float(rel.max()),
        "rel_tol": rel_tol,
        "rank_one_score": score,
        "score_tol": score_tol,
        "within_tol": bool(rel.max() <= rel_tol and score < score_tol),
    }


def _an_rank_one(ctx: RunContext, params: dict) -> dict:
    _, cov = st.empirical_moments(_ens_points(ctx, params))
    return {"score": st.rank_one_score(cov)}


def _an_product_limit(ctx: RunContext, params: dict) -> dict:
    spec, a, e = _constant_model_pieces(ctx)
    if spec.family is not ModelFamily.AVERAGE:
        raise ScenarioFormatError("product_limit applies to the average family's update matrices")
    b = averaging_map(a, e)
    c, converged = product_limit(
        b, t_max=int(params.get("t_max", 1000)), rank_one_tol=float(params.get("rank_one_tol", 1e-10))
    )
    nu = c.entries[0]
    residual = float(np.max(np.abs(nu @ b.entries - nu)))
    pair = 2.0 * dobrushin(c.entries)
    return {
        "converged": bool(converged),
        "nu": nu.tolist(),
        "stationarity_residual": residual,
        "max_row_pair_l1": pair,
    }


def _an_oscillation_final(ctx: RunContext, params: dict) -> dict:
    return {"oscillation": oscillation(ctx.trajectory.states[-1])}


def _an_mean_error_checkpoints(ctx: RunContext, params: dict) -> dict:
    curve = ctx.ensemble.mean_err_inf
    if curve is None:
        raise ScenarioFormatError("mean-error tracking was not enabled for this run")
    times = [int(t) for t in params["times"]]
    vals = [float(curve[t]) for t in times]
    monotone = all(vals[k + 1] < vals[k] for k in range(len(vals) - 1))
    return {"times": times, "values": vals, "monotone_decreasing": monotone, "final": vals[-1]}


_ANALYSES: dict[str, Callable] = {
    "consensus_time": _an_consensus_time,
    "periodicity": _an_periodicity,
    "moments": _an_moments,
    "ks": _an_ks,
    "ks_best_fit_normal": _an_ks_best_fit_normal,
    "drift": _an_drift,
    "clt_check": _an_clt_check,
    "rank_one": _an_rank_one,
    "product_limit": _an_product_limit,
    "oscillation_final": _an_oscillation_final,
    "mean_error_checkpoints": _an_mean_error_checkpoints,
}


# ---------------------------------------------------------------------------
# Running and persistence


@dataclass(eq=False)
class RunSummary:
    """Everything a run produced, ready to serialize."""

    scenario_id: str
    master_seed: int
    horizon: int
    ensemble: int
    checks: list
    analyses: dict
    diagnostics: dict
    timing: dict
    seed_provenance: dict
    outputs: dict
    ok: bool

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario_id": self.scenario_id,
            "master_seed": self.master_seed,
            "horizon": self.horizon,
            "ensemble": self.ensemble,
            "checks": self.checks,
            "analyses": self.analyses,
            "diagnostics": self.diagnostics,
            "timing": self.timing,
            "seed_provenance": self.seed_provenance,
            "outputs": self.outputs,
            "ok": self.ok,
        }


def validate_summary(doc: dict) -> None:
    """Check a summary document against the packaged schema."""
    jsonschema.Draft7Validator(_SUMMARY_SCHEMA).validate(doc)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    """Columns: t, one per component, then err_inf and osc."""
    n = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"component_{j}" for j in range(n)] + ["err_inf", "osc"])
        for t in range(traj.states.shape[0]):
            w.writerow([t] + [_fmt(v) for v in traj.states[t]] + [_fmt(traj.err_inf[t]), _fmt(traj.osc[t])])


def write_ensemble_csv(path: Path, ens: EnsembleSample) -> None:
    """Columns: run, one per component; one row per run, terminal states."""
    pts = ens.terminal_states
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run"] + [f"component_{j}" for j in range(pts.shape[1])])
        for r in range(pts.shape[0]):
            w.writerow([r] + [_fmt(v) for v in pts[r]])


def _sanitize(obj):
    """Make a JSON-safe copy: numpy to python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _execute(
    scenario: Scenario,
    out_dir=None,
    *,
    horizon: Optional[int] = None,
    ensemble: Optional[int] = None,
    master_seed: Optional[int] = None,
    overrides: Optional[dict] = None,
) -> tuple[RunSummary, RunContext]:
    t0 = time.perf_counter()
    T = scenario.horizon if horizon is None else int(horizon)
    m = scenario.ensemble if ensemble is None else int(ensemble)
    seed = scenario.master_seed if master_seed is None else int(master_seed)
    overrides = overrides or {}

    def with_overrides(kind: str, item: dict) -> dict:
        params = dict(item)
        for key, value in overrides.items():
            name, _, param = key.partition(".")
            if name == item["name"] and param:
                params[param] = value
        return params

    ok = True
    check_rows = []
    for item in scenario.checks:
        params = with_overrides("check", item)
        try:
            report = _CHECKS[item["name"]](scenario, params)
            check_rows.append(report.to_json())
        except Exception as exc:
            ok = False
            check_rows.append({"name": item["name"], "error": f"{type(exc).__name__}: {exc}"})

    trajectory = None
    ens = None
    diagnostics: dict = {}
    if scenario.model is not None:
        drift_times: set[int] = set(scenario.snapshot_times)
        track_err = False
        for item in scenario.analyses:
            if item["name"] == "drift":
                drift_times.update(int(t) for t in item.get("times", []))
            if item["name"] == "mean_error_checkpoints":
                track_err = True
        drift_times = {t for t in drift_times if 0 <= t <= T}
        trajectory = simulate(scenario.model, T, seed)
        ens = simulate_ensemble(
            scenario.model, T, m, seed, snapshot_times=sorted(drift_times), track_mean_err=track_err
        )
        if scenario.model.family is ModelFamily.AVERAGE:
            # steps with no mixing at all (coefficient zero up to float dust)
            rho = trajectory.rho[1:]
            diagnostics["dobrushin_zero_steps"] = int(np.sum(rho <= 1e-12))
            diagnostics["rho_max"] = float(np.nanmax(rho)) if rho.size else None

    ctx = RunContext(scenario=scenario, trajectory=trajectory, ensemble=ens)
    analysis_rows: dict = {}
    for item in scenario.analyses:
        params = with_overrides("analysis", item)
        try:
            if ctx.trajectory is None and item["name"] in ("consensus_time", "periodicity", "oscillation_final"):
                raise ScenarioFormatError(f"analysis {item['name']!r} needs a model")
            analysis_rows[item["name"]] = _ANALYSES[item["name"]](ctx, params)
        except Exception as exc:
            ok = False
            analysis_rows[item["name"]] = {"error": f"{type(exc).__name__}: {exc}"}

    target_dir = Path(out_dir) if out_dir is not None else Path(scenario.outputs_dir or f"out/{scenario.scenario_id}")
    target_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}
    if trajectory is not None:
        p = target_dir / "trajectory.csv"
        write_trajectory_csv(p, trajectory)
        outputs["trajectory_csv"] = str(p)
    if ens is not None:
        p = target_dir / "ensemble.csv"
        write_ensemble_csv(p, ens)
        outputs["ensemble_csv"] = str(p)

    summary = RunSummary(
        scenario_id=scenario.scenario_id,
        master_seed=seed,
        horizon=T,
        ensemble=m,
        checks=_sanitize(check_rows),
        analyses=_sanitize(analysis_rows),
        diagnostics=_sanitize(diagnostics),
        timing={"total_s": time.perf_counter() - t0},
        seed_provenance={
            "master_seed": seed,
            "stream": "philox(seed_sequence(master_seed, spawn_key=(run,)))",
        },
        outputs=outputs,
        ok=ok,
    )
    p = target_dir / "summary.json"
    with open(p, "w") as fh:
        json.dump(summary.to_json(), fh, indent=2, allow_nan=False)
    summary.outputs["summary_json"] = str(p)
    return summary, ctx


def run_scenario(
    scenario: Scenario,
    out_dir=None,
    *,
    horizon: Optional[int] = None,
    ensemble: Optional[int] = None,
    master_seed: Optional[int] = None,
    overrides: Optional[dict] = None,
) -> RunSummary:
    """Execute checks, simulation, and analyses; persist the artifacts.

    Item failures are recorded in the summary and do not stop the run; the
    summary's ``ok`` flag reports whether everything succeeded. Output goes
    to ``out_dir``, falling back to the scenario's own directive and then
    to ``out/<id>``.
    """
    summary, _ = _execute(
        scenario,
        out_dir,
        horizon=horizon,
        ensemble=ensemble,
        master_seed=master_seed,
        overrides=overrides,
    )
    return summary


# ---------------------------------------------------------------------------
# Catalog


def _catalog_manifest() -> dict:
    path = resources.files("consensuslab") / "catalog" / "manifest.json"
    return json.loads(path.read_text())


def catalog() -> list[str]:
    """Identifiers of the built-in reproducible cases, in manifest order."""
    return [c["id"] for c in _catalog_manifest()["cases"]]


def catalog_description(case_id: str) -> str:
    for c in _catalog_manifest()["cases"]:
        if c["id"] == case_id:
            return c["demonstrates"]
    raise KeyError(case_id)


def load_catalog_scenario(case_id: str) -> Scenario:
    if case_id not in catalog():
        raise ScenarioFormatError(f"unknown catalog id {case_id!r}; known: {catalog()}")
    path = resources.files("consensuslab") / "catalog" / f"{case_id}.json"
    return load_scenario(json.loads(path.read_text()))


# Acceptance predicates for `reproduce`: one per catalog case, each returns
# (passed, detail) given the finished summary and the run context.


def _get(summary: RunSummary, name: str) -> dict:
    return summary.analyses.get(name, {})


def _check_ok(summary: RunSummary, name: str) -> bool:
    for row in summary.checks:
        if row.get("name") == name:
            return bool(row.get("satisfied"))
    return False


def _pred_base_3agent(summary, ctx):
    env_ok = True
    traj = ctx.trajectory
    rho = 0.7
    for t in range(traj.horizon + 1):
        if traj.err_inf[t] > rho**t * traj.err_inf[0] + 1e-12:
            env_ok = False
            break
    ct = _get(summary, "consensus_time").get("time")
    ok = _check_ok(summary, "base_rates") and env_ok and ct is not None and ct <= 39
    return ok, f"envelope={env_ok}, consensus_time={ct}"


def _pred_rho_harmonic(summary, ctx):
    for row in summary.checks:
        if row.get("name") == "product_to_zero":
            w = row["witness"]
            T = w["T"]
            exact = abs(w["partial_product"] * (T + 1) - 1.0) < 1e-10
            return bool(row["satisfied"] and exact), f"partial={w['partial_product']:g}, exact={exact}"
    return False, "missing check"


def _pred_rho_exp(summary, ctx):
    import math

    for row in summary.checks:
        if row.get("name") == "product_to_zero":
            w = row["witness"]
            limit = math.exp(-(math.pi**2) / 6.0)
            close = abs(w["partial_product"] - limit) < 1e-4
            return bool((not row["satisfied"]) and close), (
                f"partial={w['partial_product']:.6f}, limit={limit:.6f}, stalled={not row['satisfied']}"
            )
    return False, "missing check"


def _pred_noisy_decay(summary, ctx):
    ct = _get(summary, "consensus_time").get("time")
    final_err = float(ctx.trajectory.err_inf[-1])
    ok = ct is not None and final_err < 1e-3
    return ok, f"consensus_time={ct}, final_err={final_err:.2e}"


def _pred_gaussian_dist(summary, ctx):
    d = _get(summary, "drift").get("max_distance")
    ok = d is not None and d < 0.05
    return ok, f"drift={d}"


def _pred_rademacher_dist(summary, ctx):
    d = _get(summary, "drift").get("max_distance")
    ks = _get(summary, "ks_best_fit_normal")
    stats_ok = ks and all(row["exceeds_critical"] for row in ks["per_coordinate"])
    ok = d is not None and d < 0.05 and stats_ok
    return ok, f"drift={d}, non_gaussian={stats_ok}"


def _pred_epsilon_oscillator(summary, ctx):
    drift = _get(summary, "drift").get("max_distance")
    ll1b_violated = not _check_ok(summary, "ll1b")
    ok = drift is not None and drift > 0.1 and ll1b_violated and _check_ok(summary, "ll1")
    return ok, f"drift={drift}, increment_sum_divergent={ll1b_violated}"


def _pred_cauchy(summary, ctx):
    ks = _get(summary, "ks")
    ok = bool(ks.get("below_critical"))
    return ok, f"ks={ks.get('statistic')}, critical={ks.get('critical')}"


def _pred_nonlinear_tanh(summary, ctx):
    ct = _get(summary, "consensus_time").get("time")
    traj = ctx.trajectory
    contract_ok = True
    for t in range(1, traj.horizon + 1):
        if traj.err_inf[t] > traj.rho[t] * traj.err_inf[t - 1] + 1e-12:
            contract_ok = False
            break
    ok = _check_ok(summary, "nonlinear_bounds") and ct is not None and contract_ok
    return ok, f"consensus_time={ct}, per_step_contraction={contract_ok}"


def _pred_signum(summary, ctx):
    p = _get(summary, "periodicity").get("period")
    return p == 2, f"period={p}"


def _pred_average_consensus(summary, ctx):
    pl = _get(summary, "product_limit")
    osc_final = _get(summary, "oscillation_final").get("oscillation")
    ok = (
        _check_ok(summary, "average_rates")
        and pl.get("converged")
        and pl.get("max_row_pair_l1", 1.0) < 1e-10
        and pl.get("stationarity_residual", 1.0) < 1e-8
        and osc_final is not None
        and osc_final < 1e-9
    )
    return ok, f"product_limit={pl.get('converged')}, nu_residual={pl.get('stationarity_residual')}, osc={osc_final}"


def _pred_average_clt(summary, ctx):
    r = _get(summary, "clt_check")
    ok = bool(r.get("within_tol"))
    return ok, f"max_rel_err={r.get('max_rel_err')}, rank_one_score={r.get('rank_one_score')}"


def _pred_average_line(summary, ctx):
    s = _get(summary, "rank_one").get("score")
    ok = s is not None and s < 0.05
    return ok, f"rank_one_score={s}"


_PREDICATES = {
    "base-3agent": _pred_base_3agent,
    "rho-harmonic": _pred_rho_harmonic,
    "rho-exp-nonzero": _pred_rho_exp,
    "noisy-decay": _pred_noisy_decay,
    "gaussian-dist": _pred_gaussian_dist,
    "rademacher-dist": _pred_rademacher_dist,
    "epsilon-oscillator": _pred_epsilon_oscillator,
    "cauchy-invariant": _pred_cauchy,
    "nonlinear-tanh": _pred_nonlinear_tanh,
    "signum-periodic": _pred_signum,
    "average-consensus": _pred_average_consensus,
    "average-clt": _pred_average_clt,
    "average-line": _pred_average_line,
}


def reproduce(case_id: str, out_dir=None) -> tuple[RunSummary, bool, str]:
    """Run a catalog case and evaluate its acceptance predicate."""
    scenario = load_catalog_scenario(case_id)
    summary, ctx = _execute(scenario, out_dir=out_dir)
    passed, detail = _PREDICATES[case_id](summary, ctx)
    return summary, bool(passed), detail
