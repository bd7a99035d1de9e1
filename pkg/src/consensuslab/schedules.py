"""Time-indexed schedules for weights matrices, learning rates and scalars.

A schedule is any callable mapping a step index ``t >= 0`` to a value. The
classes below cover the forms scenarios use; anything else can be passed as
a bare function.
"""

from __future__ import annotations

import numpy as np

from .errors import TableExhaustedError


class Constant:
    """Schedule that returns the same value at every step."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __call__(self, t: int):
        return self.value

    def __repr__(self):
        return f"Constant({self.value!r})"


class Table:
    """Schedule backed by a finite table, indexed from ``t0``."""

    __slots__ = ("values", "t0")

    def __init__(self, values, t0: int = 0):
        self.values = list(values)
        if not self.values:
            raise ValueError("table schedule needs at least one value")
        self.t0 = t0

    def __call__(self, t: int):
        i = t - self.t0
        if i < 0 or i >= len(self.values):
            raise TableExhaustedError(t, f"table schedule covers t={self.t0}..{self.t0 + len(self.values) - 1}, asked for t={t}")
        return self.values[i]

    def __len__(self):
        return len(self.values)


def as_schedule(value):
    """Wrap a bare value in a Constant schedule; pass callables through."""
    if callable(value):
        return value
    return Constant(value)


def rho_harmonic(T: int) -> np.ndarray:
    """Contraction sequence ``t / (t + 1)`` for t = 1..T.

    Its partial products collapse to ``1 / (T + 1)``, so the product still
    vanishes even though the factors approach one.
    """
    t = np.arange(1, T + 1, dtype=float)
    return t / (t + 1.0)


def rho_exp_inverse_square(T: int) -> np.ndarray:
    """Contraction sequence ``exp(-1/t^2)`` for t = 1..T.

    The partial products converge to the positive constant
    ``exp(-pi^2/6)``, the canonical case of factors below one whose product
    does not vanish.
    """
    t = np.arange(1, T + 1, dtype=float)
    return np.exp(-1.0 / t**2)
