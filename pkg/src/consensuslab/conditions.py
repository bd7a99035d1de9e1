"""Numerical checkers for the hypotheses behind the convergence guarantees.

Pointwise rate conditions are decided exactly. The asymptotic ones
(vanishing products, bounded tail sums) cannot be decided from a finite
horizon, so those checkers report the measured quantities together with an
advisory verdict; the horizon and the tolerances that produced the verdict
are always part of the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InconsistentDeclarationError
from .matrices import contraction_factor, entries_of, matrix_inf_norm

PRODUCT_TOL = 1e-6
SUMMABILITY_TOL = 1e-3
LOG_DECREMENT_TOL = 0.1
SUP_BOUND = 1e3
GROWTH_FRAC = 0.25


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one hypothesis check.

    ``witness`` carries the measured quantities and, when the check fails,
    enough to see why (offending index, attained sup, partial sums).
    """

    name: str
    satisfied: bool
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        return {"name": self.name, "satisfied": bool(self.satisfied), "witness": clean(self.witness)}


def check_base_rates(A, eps, beta=None, delta: Optional[float] = None) -> ConditionReport:
    """Strict per-agent rate window ``0 < eps_i < 2 a_ii``.

    Equivalent to the per-step contraction factor being below one. When a
    positive weight vector ``beta`` and a bound ``delta`` are supplied, the
    relaxed weighted-norm variant is verified instead: ``A beta <= delta
    beta`` componentwise plus ``|a_ii - eps_i| + delta - a_ii < 1``.
    """
    a = entries_of(A)
    e = np.asarray(eps, dtype=float)
    d = np.diagonal(a)
    if beta is None:
        ok = (e > 0.0) & (e < 2.0 * d)
        witness = {
            "upper_bounds": 2.0 * d,
            "eps": e,
            "rho": contraction_factor(a, e),
        }
        if not ok.all():
            i = int(np.argmin(ok))
            witness["first_violation"] = i
            witness["violations"] = np.nonzero(~ok)[0]
        return ConditionReport("base_rates", bool(ok.all()), witness)

    b = np.asarray(beta, dtype=float)
    if np.any(b <= 0.0):
        raise ValueError("beta must be strictly positive")
    if delta is None:
        raise ValueError("extended mode needs both beta and delta")
    growth = a @ b - delta * b
    dominated = growth <= 1e-12
    factors = np.abs(d - e) + delta - d
    ok = dominated.all() and factors.max() < 1.0
    witness = {
        "mode": "weighted",
        "delta": float(delta),
        "domination_residual": growth,
        "weighted_factor": float(factors.max()),
    }
    if not dominated.all():
        witness["first_violation"] = int(np.argmin(dominated))
    elif factors.max() >= 1.0:
        witness["first_violation"] = int(np.argmax(factors))
    return ConditionReport("base_rates", bool(ok), witness)


def check_average_rates(A, eps, strict: bool = True) -> ConditionReport:
    """Rate window for mean-feedback dynamics.

    Strict mode requires ``0 < eps_i < n/(n-1) a_ii``, the guarantee for
    fixed schedules; inclusive mode allows equality at both ends, matching
    the weaker per-step requirement for time-varying schedules.
    """
    a = entries_of(A)
    e = np.asarray(eps, dtype=float)
    d = np.diagonal(a)
    n = a.shape[0]
    hi = (n / (n - 1.0)) * d if n > 1 else np.full_like(d, np.inf)
    if strict:
        ok = (e > 0.0) & (e < hi)
    else:
        ok = (e >= 0.0) & (e <= hi)
    witness = {"upper_bounds": hi, "eps": e, "strict": strict}
    if not ok.all():
        i = int(np.argmin(ok))
        witness["first_violation"] = i
        witness["violations"] = np.nonzero(~ok)[0]
    return ConditionReport("average_rates", bool(ok.all()), witness)


def _rho_array(rhos, T: Optional[int]) -> np.ndarray:
    r = np.asarray(rhos, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("need a nonempty 1-d sequence of contraction factors")
    if np.any(r < 0.0):
        raise ValueError("contraction factors must be nonnegative")
    if T is not None:
        if T < 1 or T > r.size:
            raise ValueError(f"horizon T={T} outside 1..{r.size}")
        r = r[:T]
    return r


def check_product_to_zero(
    rhos,
    T: Optional[int] = None,
    product_tol: float = PRODUCT_TOL,
    decrement_tol: float = LOG_DECREMENT_TOL,
) -> ConditionReport:
    """Advisory check that the running product of factors dies out.

    Reports the partial product at the horizon and classifies the trend of
    its logarithm: "vanishing" when the log keeps falling by at least
    ``decrement_tol`` over the back half of the horizon, "stalled" when it
    has effectively stopped moving. Satisfied when the partial product is
    already below ``product_tol`` or the trend is still vanishing.
    """
    r = _rho_array(rhos, T)
    with np.errstate(divide="ignore"):
        logs = np.log(r)
    log_partial = np.cumsum(logs)
    partial = float(np.exp(log_partial[-1]))
    half = log_partial[len(log_partial) // 2 - 1] if len(log_partial) > 1 else 0.0
    decrement = float(log_partial[-1] - half)
    trend = "vanishing" if decrement <= -decrement_tol else "stalled"
    satisfied = partial < product_tol or trend == "vanishing"
    return ConditionReport(
        "product_to_zero",
        bool(satisfied),
        {
            "T": int(r.size),
            "partial_product": partial,
            "log_partial_product": float(log_partial[-1]),
            "back_half_log_decrement": decrement,
            "trend": trend,
            "product_tol": product_tol,
            "decrement_tol": decrement_tol,
        },
    )


def check_ll1(
    rhos,
    T: Optional[int] = None,
    sup_bound: float = SUP_BOUND,
    growth_frac: float = GROWTH_FRAC,
) -> ConditionReport:
    """Advisory check that nested products of the factors stay summable.

    Runs the recursion ``S_t = rho_t (1 + S_{t-1})``, whose supremum is the
    quantity that must stay finite. Satisfied when the observed sup is
    below ``sup_bound`` and also small relative to the horizon (below
    ``growth_frac * T``): a recursion that is actually unbounded grows
    linearly with the horizon, while a bounded one stops scaling with it.
    Short horizons can under-certify slowly-mixing but bounded sequences;
    the fitted back-half slope is reported for diagnosis either way.
    """
    r = _rho_array(rhos, T)
    s = np.empty(r.size)
    acc = 0.0
    for i, x in enumerate(r):
        acc = x * (1.0 + acc)
        s[i] = acc
    sup = float(s.max())
    arg = int(s.argmax())
    tail = s[s.size // 2 :]
    if tail.size >= 2:
        slope = float(np.polyfit(np.arange(tail.size, dtype=float), tail, 1)[0])
    else:
        slope = 0.0
    satisfied = sup < sup_bound and sup < growth_frac * r.size
    return ConditionReport(
        "ll1",
        bool(satisfied),
        {
            "T": int(r.size),
            "sup": sup,
            "sup_at_t": arg + 1,
            "final": float(s[-1]),
            "back_half_slope": slope,
            "sup_bound": sup_bound,
            "growth_frac": growth_frac,
        },
    )


def check_ll1b(
    schedule_A: Callable[[int], object],
    schedule_E: Callable[[int], object],
    T: int,
    summability_tol: float = SUMMABILITY_TOL,
) -> ConditionReport:
    """Advisory summability of schedule increments.

    Accumulates ``|A_t - A_{t-1}|_inf + |E_t - E_{t-1}|_inf`` for t = 1..T
    and compares the tail (t > T/2) against the head; a tail below
    ``summability_tol`` is taken as evidence the series converges.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    prev_a = entries_of(schedule_A(0))
    prev_e = np.atleast_1d(np.asarray(schedule_E(0), dtype=float))
    head = tail = 0.0
    cut = T // 2
    for t in range(1, T + 1):
        a = entries_of(schedule_A(t))
        e = np.atleast_1d(np.asarray(schedule_E(t), dtype=float))
        alpha = matrix_inf_norm(a - prev_a) + float(np.max(np.abs(e - prev_e)))
        if t > cut:
            tail += alpha
        else:
            head += alpha
        prev_a, prev_e = a, e
    total = head + tail
    satisfied = tail < summability_tol
    return ConditionReport(
        "ll1b",
        bool(satisfied),
        {
            "T": T,
            "partial_sum": total,
            "head_sum": head,
            "tail_sum": tail,
            "summability_tol": summability_tol,
        },
    )


def default_grid(lo: float = -10.0, hi: float = 10.0, points: int = 1001) -> np.ndarray:
    """Sampling grid used to audit declared derivative bounds."""
    return np.linspace(lo, hi, points)


def check_nonlinear_bounds(f, schedule_A, T: int, grid=None) -> ConditionReport:
    """Derivative-pinching condition for nonlinear learning.

    Satisfied when the declared derivative range is strictly positive and
    its top stays below twice the smallest self-weight seen over the
    horizon. The declaration is audited first: sampled derivative values on
    the grid must lie inside the declared range, and a function with no
    declared range is rejected outright.
    """
    if not getattr(f, "has_declared_bounds", False):
        raise InconsistentDeclarationError(
            "learning function declares no derivative bounds; the pinching condition cannot apply"
        )
    g = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValueError("empty sampling grid")
    if f.derivative is None:
        raise InconsistentDeclarationError("declared bounds but no derivative to audit them against")
    sampled = np.asarray(f.derivative(g), dtype=float)
    slack = 1e-12
    if sampled.min() < f.deriv_inf - slack or sampled.max() > f.deriv_sup + slack:
        raise InconsistentDeclarationError(
            f"sampled derivative range [{sampled.min():g}, {sampled.max():g}] leaves the "
            f"declared [{f.deriv_inf:g}, {f.deriv_sup:g}]"
        )
    min_aii = np.inf
    for t in range(1, T + 1):
        d = np.diagonal(entries_of(schedule_A(t)))
        min_aii = min(min_aii, float(d.min()))
    satisfied = f.deriv_inf > 0.0 and f.deriv_sup < 2.0 * min_aii
    return ConditionReport(
        "nonlinear_bounds",
        bool(satisfied),
        {
            "deriv_inf": f.deriv_inf,
            "deriv_sup": f.deriv_sup,
            "min_diagonal": min_aii,
            "upper_limit": 2.0 * min_aii,
            "sampled_range": [float(sampled.min()), float(sampled.max())],
            "T": T,
        },
    )


def nonlinear_rho(f, A) -> float:
    """Worst-case contraction figure of a nonlinear step.

    Evaluates ``|a_ii - d| + 1 - a_ii`` at both ends of the declared
    derivative range (the expression is piecewise monotone in ``d``, so the
    supremum over the range is attained at an endpoint) and maximizes over
    agents.
    """
    if not getattr(f, "has_declared_bounds", False):
        raise InconsistentDeclarationError("learning function declares no derivative bounds")
    d = np.diagonal(entries_of(A))
    lo = np.abs(d - f.deriv_inf) + 1.0 - d
    hi = np.abs(d - f.deriv_sup) + 1.0 - d
    return float(np.maximum(lo, hi).max())
