"""Step maps and trajectory simulation for the learning-dynamics families.

Five families share one engine:

* ``BASE``: deterministic averaging plus feedback toward a known target.
* ``NOISY_FEEDBACK``: the same with a disturbance inside the feedback.
* ``PURE_NOISE_FEEDBACK``: feedback carries only the disturbance.
* ``NONLINEAR``: the feedback passes through a componentwise learning
  function instead of a fixed rate.
* ``AVERAGE``: feedback toward the current population mean, so the
  consensus value is endogenous.

The step functions are pure and broadcast over a trailing run axis: the
state may be shape ``(n,)`` or ``(n, m)``. Simulation is deterministic
given ``(spec, T, seed)``; ensembles derive every run's randomness from
``(master_seed, run_index)`` only, so results never depend on execution
order or batching.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ScheduleError
from .matrices import (
    StochasticMatrix,
    averaging_map,
    contraction_factor,
    dobrushin,
    entries_of,
)
from .noise import NoiseSpec, sample_noise_block, substream
from .schedules import Constant, as_schedule


class ModelFamily(enum.Enum):
    BASE = "base"
    NOISY_FEEDBACK = "noisy_feedback"
    PURE_NOISE_FEEDBACK = "pure_noise_feedback"
    NONLINEAR = "nonlinear"
    AVERAGE = "average"


_TARGETED = (ModelFamily.BASE, ModelFamily.NOISY_FEEDBACK)


@dataclass(frozen=True, eq=False)
class LearningFunction:
    """Componentwise feedback map with optional declared derivative range.

    ``fn`` must be vectorized over numpy arrays and satisfy ``fn(0) == 0``
    exactly, so a synchronized state stays put. ``deriv_inf``/``deriv_sup``
    are declarations about the derivative over the working interval; the
    condition checkers audit them against ``derivative`` on a sample grid.
    Functions without a usable derivative (discontinuous steps, say) leave
    all three unset and are rejected by the hypothesis checkers while still
    being simulatable.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    deriv_inf: Optional[float] = None
    deriv_sup: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        if float(self.fn(0.0)) != 0.0:
            raise ValueError("learning function must vanish at zero")
        if (self.deriv_inf is None) != (self.deriv_sup is None):
            raise ValueError("declare both derivative bounds or neither")
        if self.deriv_inf is not None and self.deriv_inf > self.deriv_sup:
            raise ValueError("deriv_inf must not exceed deriv_sup")

    def __call__(self, u):
        return self.fn(u)

    @property
    def has_declared_bounds(self) -> bool:
        return self.deriv_inf is not None


def linear_learning(slope: float) -> LearningFunction:
    """f(u) = slope * u, the fixed-rate special case."""
    s = float(slope)
    return LearningFunction(
        fn=lambda u: s * np.asarray(u, dtype=float),
        derivative=lambda u: np.full_like(np.asarray(u, dtype=float), s),
        deriv_inf=s,
        deriv_sup=s,
        name=f"linear({s})",
    )


def scaled_tanh_learning(scale: float = 0.5, bound: float = 3.0) -> LearningFunction:
    """f(u) = scale * tanh(u), bounds declared over [-bound, bound]."""
    s = float(scale)
    b = float(bound)
    if s <= 0 or b <= 0:
        raise ValueError("scale and bound must be positive")
    return LearningFunction(
        fn=lambda u: s * np.tanh(u),
        derivative=lambda u: s * (1.0 - np.tanh(u) ** 2),
        deriv_inf=s * (1.0 - np.tanh(b) ** 2),
        deriv_sup=s,
        name=f"scaled_tanh({s}, bound={b})",
    )


def scaled_sign_learning(step: float) -> LearningFunction:
    """f(u) = step * sign(u). No derivative exists, so no bounds are declared."""
    s = float(step)
    return LearningFunction(fn=lambda u: s * np.sign(u), name=f"scaled_sign({s})")


LearningFunctions = Union[LearningFunction, Sequence[LearningFunction]]


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Declarative description of one dynamics scenario.

    ``schedule_A`` and ``schedule_E`` map a step index ``t >= 1`` to the
    weights matrix and learning rates used in that step. ``include_target``
    only matters for the nonlinear family and selects whether the feedback
    argument carries the target (otherwise only the disturbance enters).
    """

    family: ModelFamily
    n: int
    schedule_A: Callable[[int], object]
    x0: np.ndarray
    schedule_E: Optional[Callable[[int], object]] = None
    sigma_bar: Optional[float] = None
    noise: Optional[NoiseSpec] = None
    learning_fn: Optional[LearningFunctions] = None
    include_target: bool = True

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (self.n,):
            raise ValueError(f"x0 must have shape ({self.n},)")
        if not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be finite")
        object.__setattr__(self, "x0", x0)
        noise = self.noise if self.noise is not None else NoiseSpec.zero(self.n)
        if noise.n != self.n:
            raise ValueError(f"noise dimension {noise.n} does not match n={self.n}")
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "schedule_A", as_schedule(self.schedule_A))
        if isinstance(self.schedule_A, Constant):
            a = entries_of(self.schedule_A.value)
            if a.shape != (self.n, self.n):
                raise ValueError(f"weights matrix has shape {a.shape}, expected ({self.n}, {self.n})")

        fam = self.family
        if fam is ModelFamily.NONLINEAR:
            if self.learning_fn is None:
                raise ValueError("nonlinear family needs a learning function")
            if self.schedule_E is not None:
                raise ValueError("nonlinear family takes a learning function, not rate schedules")
            fns = self.learning_fn
            if not isinstance(fns, LearningFunction):
                fns = tuple(fns)
                if len(fns) != self.n:
                    raise ValueError(f"need one learning function per agent ({self.n})")
                object.__setattr__(self, "learning_fn", fns)
        else:
            if self.schedule_E is None:
                raise ValueError(f"{fam.value} family needs a learning-rate schedule")
            object.__setattr__(self, "schedule_E", as_schedule(self.schedule_E))
            if self.learning_fn is not None:
                raise ValueError("learning functions belong to the nonlinear family")

        needs_target = fam in _TARGETED or (fam is ModelFamily.NONLINEAR and self.include_target)
        if needs_target and self.sigma_bar is None:
            raise ValueError(f"{fam.value} family needs sigma_bar")
        if not needs_target and self.sigma_bar is not None:
            raise ValueError(f"{fam.value} family has no consensus target; drop sigma_bar")
        if self.sigma_bar is not None:
            object.__setattr__(self, "sigma_bar", float(self.sigma_bar))
        if fam is ModelFamily.BASE and noise.kind != "zero":
            raise ValueError("base family is deterministic; use zero noise")

    # Convenience constructors mirror how scenarios are usually written.

    @classmethod
    def base(cls, A, eps, sigma_bar: float, x0) -> "ModelSpec":
        x0 = np.asarray(x0, dtype=float)
        return cls(ModelFamily.BASE, x0.shape[0], as_schedule(A), x0,
                   schedule_E=as_schedule(eps), sigma_bar=sigma_bar)

    @classmethod
    def noisy(cls, A, eps, sigma_bar: float, noise: NoiseSpec, x0) -> "ModelSpec":
        x0 = np.asarray(x0, dtype=float)
        return cls(ModelFamily.NOISY_FEEDBACK, x0.shape[0], as_schedule(A), x0,
                   schedule_E=as_schedule(eps), sigma_bar=sigma_bar, noise=noise)

    @classmethod
    def pure_noise(cls, A, eps, noise: NoiseSpec, x0) -> "ModelSpec":
        x0 = np.asarray(x0, dtype=float)
        return cls(ModelFamily.PURE_NOISE_FEEDBACK, x0.shape[0], as_schedule(A), x0,
                   schedule_E=as_schedule(eps), noise=noise)

    @classmethod
    def nonlinear(cls, A, learning_fn, x0, sigma_bar: Optional[float] = None,
                  noise: Optional[NoiseSpec] = None) -> "ModelSpec":
        x0 = np.asarray(x0, dtype=float)
        return cls(ModelFamily.NONLINEAR, x0.shape[0], as_schedule(A), x0,
                   sigma_bar=sigma_bar, noise=noise, learning_fn=learning_fn,
                   include_target=sigma_bar is not None)

    @classmethod
    def average(cls, A, eps, noise: NoiseSpec, x0) -> "ModelSpec":
        x0 = np.asarray(x0, dtype=float)
        return cls(ModelFamily.AVERAGE, x0.shape[0], as_schedule(A), x0,
                   schedule_E=as_schedule(eps), noise=noise)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one run plus per-step diagnostics.

    ``states`` has one row per time 0..T unless the run was asked to keep
    only the terminal state, in which case it has a single row and
    ``full_states`` is False. ``err_inf`` is the sup-distance to the target
    (NaN when the family has none), ``osc`` the state spread, and ``rho``
    the per-step contraction figure of the family (NaN at t=0 and whenever
    no figure applies).
    """

    states: np.ndarray
    err_inf: np.ndarray
    osc: np.ndarray
    rho: np.ndarray
    sigma_bar: Optional[float]
    full_states: bool = True

    @property
    def horizon(self) -> int:
        return self.err_inf.shape[0] - 1

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class EnsembleSample:
    """Terminal states of m independent seeded runs.

    ``snapshots`` maps requested intermediate times to (m, n) state blocks;
    ``mean_err_inf`` is the ensemble mean of the sup-error per step when it
    was tracked.
    """

    terminal_states: np.ndarray
    t_final: int
    master_seed: int
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    mean_err_inf: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.terminal_states.shape[0]

    @property
    def n(self) -> int:
        return self.terminal_states.shape[1]

    def to_empirical(self, t: Optional[int] = None, centered_scaled: bool = False):
        """View the terminal block (or a snapshot) as a stats sample."""
        from .stats import EmpiricalSample

        if t is None or t == self.t_final:
            pts, tf = self.terminal_states, self.t_final
        else:
            pts, tf = self.snapshots[t], t
        return EmpiricalSample(points=pts, t_final=tf, centered_scaled=centered_scaled)


def _eps_col(eps: np.ndarray, x: np.ndarray) -> np.ndarray:
    return eps[:, None] if x.ndim == 2 else eps


def _state(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2):
        raise ValueError("state must be a vector or an (n, m) block")
    return x


def step_base(A, eps, sigma_bar: float, x) -> np.ndarray:
    """One deterministic feedback step: A x + E (target - x)."""
    a = entries_of(A)
    x = _state(x)
    e = np.asarray(eps, dtype=float)
    return a @ x + _eps_col(e, x) * (sigma_bar - x)


def step_noisy(A, eps, sigma_bar: float, gamma, x) -> np.ndarray:
    """Feedback step with a disturbed target: A x + E (target + gamma - x)."""
    a = entries_of(A)
    x = _state(x)
    e = np.asarray(eps, dtype=float)
    g = np.asarray(gamma, dtype=float)
    return a @ x + _eps_col(e, x) * (sigma_bar + g - x)


def step_pure_noise(A, eps, gamma, x) -> np.ndarray:
    """Feedback step whose reference signal is the disturbance itself."""
    a = entries_of(A)
    x = _state(x)
    e = np.asarray(eps, dtype=float)
    g = np.asarray(gamma, dtype=float)
    return a @ x + _eps_col(e, x) * (g - x)


def _apply_learning(f: LearningFunctions, u: np.ndarray) -> np.ndarray:
    if isinstance(f, LearningFunction):
        return f(u)
    out = np.empty_like(u)
    for i, fi in enumerate(f):
        out[i] = fi(u[i])
    return out


def step_nonlinear(A, f: LearningFunctions, sigma_bar: Optional[float], gamma, x) -> np.ndarray:
    """Nonlinear feedback step: A x + f(target + gamma - x).

    Pass ``sigma_bar=None`` for the target-free form, where only the
    disturbance drives the feedback.
    """
    a = entries_of(A)
    x = _state(x)
    g = np.asarray(gamma, dtype=float)
    ref = g if sigma_bar is None else sigma_bar + g
    return a @ x + _apply_learning(f, ref - x)


def step_average(A, eps, gamma, x) -> np.ndarray:
    """Mean-feedback step: B x + E gamma with B the averaging map of (A, E)."""
    x = _state(x)
    e = np.asarray(eps, dtype=float)
    g = np.asarray(gamma, dtype=float)
    b = averaging_map(A, e).entries
    return b @ x + _eps_col(e, x) * g


def _query_matrix(sched, t: int) -> np.ndarray:
    try:
        v = sched(t)
    except ScheduleError:
        raise
    except Exception as exc:
        raise ScheduleError(t, f"weights schedule failed at t={t}: {exc}") from exc
    if isinstance(v, StochasticMatrix):
        return v.entries
    try:
        return StochasticMatrix(v).entries
    except ValueError as exc:
        raise ScheduleError(t, f"weights schedule produced an invalid matrix at t={t}: {exc}") from exc


def _query_eps(sched, t: int, n: int) -> np.ndarray:
    try:
        v = sched(t)
    except ScheduleError:
        raise
    except Exception as exc:
        raise ScheduleError(t, f"rate schedule failed at t={t}: {exc}") from exc
    e = np.atleast_1d(np.asarray(v, dtype=float))
    if e.shape == (1,) and n > 1:
        e = np.full(n, e[0])
    if e.shape != (n,) or not np.all(np.isfinite(e)):
        raise ScheduleError(t, f"rate schedule produced an invalid value at t={t}: {v!r}")
    return e


def _nonlinear_rho_value(f: LearningFunctions, a: np.ndarray) -> float:
    d = np.diagonal(a)
    fs = [f] * len(d) if isinstance(f, LearningFunction) else list(f)
    worst = np.nan
    vals = []
    for aii, fi in zip(d, fs):
        if not fi.has_declared_bounds:
            return worst
        lo = abs(aii - fi.deriv_inf) + 1.0 - aii
        hi = abs(aii - fi.deriv_sup) + 1.0 - aii
        vals.append(max(lo, hi))
    return float(max(vals))


def _run_engine(
    spec: ModelSpec,
    T: int,
    m: int,
    master_seed: int,
    *,
    record_states: bool,
    snapshot_times: Sequence[int] = (),
    track_mean_err: bool = False,
    diagnostics: bool = False,
):
    """Shared deterministic stepper; the single-run path is the m=1 case."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    if m < 1:
        raise ValueError("m must be at least 1")
    n = spec.n
    fam = spec.family
    sbar = spec.sigma_bar
    snapset = set(int(t) for t in snapshot_times)
    bad = [t for t in snapset if t < 0 or t > T]
    if bad:
        raise ValueError(f"snapshot times out of range 0..{T}: {sorted(bad)}")
    if track_mean_err and sbar is None:
        raise ValueError("error tracking needs a family with a consensus target")

    X = np.repeat(spec.x0[:, None], m, axis=1)

    a_const = isinstance(spec.schedule_A, Constant)
    e_const = spec.schedule_E is None or isinstance(spec.schedule_E, Constant)
    A = eps = B = rho_const = None
    if T > 0:
        if a_const:
            A = _query_matrix(spec.schedule_A, 1)
        if spec.schedule_E is not None and e_const:
            eps = _query_eps(spec.schedule_E, 1, n)
        if fam is ModelFamily.AVERAGE and a_const and e_const:
            B = averaging_map(A, eps).entries
            rho_const = dobrushin(B)
        elif diagnostics and a_const and e_const:
            if fam is ModelFamily.NONLINEAR:
                rho_const = _nonlinear_rho_value(spec.learning_fn, A)
            elif eps is not None:
                rho_const = contraction_factor(A, eps)

    if spec.noise.is_random:
        block = np.empty((T, n, m))
        for r in range(m):
            block[:, :, r] = sample_noise_block(spec.noise, T, substream(master_seed, r))
    else:
        block = sample_noise_block(spec.noise, T, None)  # (T, n), shared by runs

    states = np.empty((T + 1, n)) if record_states else None
    err = np.full(T + 1, np.nan)
    osc = np.empty(T + 1)
    rho = np.full(T + 1, np.nan)
    mean_err = np.empty(T + 1) if track_mean_err else None
    snaps: dict[int, np.ndarray] = {}

    def observe(t: int):
        if record_states:
            states[t] = X[:, 0]
        if diagnostics:
            if sbar is not None:
                err[t] = float(np.abs(X[:, 0] - sbar).max())
            osc[t] = float(X[:, 0].max() - X[:, 0].min())
        if track_mean_err:
            mean_err[t] = float(np.abs(X - sbar).max(axis=0).mean())
        if t in snapset:
            snaps[t] = X.T.copy()

    observe(0)
    for t in range(1, T + 1):
        a = A if a_const else _query_matrix(spec.schedule_A, t)
        if spec.schedule_E is not None:
            e = eps if e_const else _query_eps(spec.schedule_E, t, n)
        g = block[t - 1] if spec.noise.is_random else block[t - 1][:, None]

        if fam is ModelFamily.BASE:
            X = a @ X + e[:, None] * (sbar - X)
            if diagnostics:
                rho[t] = rho_const if rho_const is not None else contraction_factor(a, e)
        elif fam is ModelFamily.NOISY_FEEDBACK:
            X = a @ X + e[:, None] * (sbar + g - X)
            if diagnostics:
                rho[t] = rho_const if rho_const is not None else contraction_factor(a, e)
        elif fam is ModelFamily.PURE_NOISE_FEEDBACK:
            X = a @ X + e[:, None] * (g - X)
            if diagnostics:
                rho[t] = rho_const if rho_const is not None else contraction_factor(a, e)
        elif fam is ModelFamily.NONLINEAR:
            ref = g if sbar is None else sbar + g
            X = a @ X + _apply_learning(spec.learning_fn, ref - X)
            if diagnostics:
                rho[t] = rho_const if rho_const is not None else _nonlinear_rho_value(spec.learning_fn, a)
        else:  # AVERAGE
            b = B if B is not None else averaging_map(a, e).entries
            X = b @ X + e[:, None] * g
            if diagnostics:
                rho[t] = rho_const if rho_const is not None else dobrushin(b)
        observe(t)

    return X, states, err, osc, rho, mean_err, snaps


def simulate(spec: ModelSpec, T: int, seed: int, keep_states: bool = True) -> Trajectory:
    """One trajectory of length T, deterministic given (spec, T, seed).

    The run's randomness comes from the substream ``(seed, run=0)``, so an
    ensemble of size one started from the same master seed reproduces it
    exactly. With ``keep_states=False`` only the terminal state is kept
    (diagnostics are still full length).
    """
    X, states, err, osc, rho, _, _ = _run_engine(
        spec, T, 1, seed, record_states=keep_states, diagnostics=True
    )
    if keep_states:
        out_states = states
    else:
        out_states = X[:, 0][None, :].copy()
    return Trajectory(
        states=out_states,
        err_inf=err,
        osc=osc,
        rho=rho,
        sigma_bar=spec.sigma_bar,
        full_states=keep_states,
    )


def simulate_ensemble(
    spec: ModelSpec,
    T: int,
    m: int,
    master_seed: int,
    snapshot_times: Sequence[int] = (),
    track_mean_err: bool = False,
) -> EnsembleSample:
    """Terminal states of m independent runs driven by per-run substreams.

    Run ``r`` draws all of its noise from ``substream(master_seed, r)``, so
    the result is a pure function of ``(spec, T, m, master_seed)`` and is
    unaffected by batching or parallel execution. Requested
    ``snapshot_times`` record full (m, n) state blocks along the way.
    Random noise is pre-drawn for the whole run set, costing about
    ``8 * T * n * m`` bytes of memory.
    """
    X, _, _, _, _, mean_err, snaps = _run_engine(
        spec,
        T,
        m,
        master_seed,
        record_states=False,
        snapshot_times=snapshot_times,
        track_mean_err=track_mean_err,
    )
    return EnsembleSample(
        terminal_states=X.T.copy(),
        t_final=T,
        master_seed=master_seed,
        snapshots=snaps,
        mean_err_inf=mean_err,
    )
