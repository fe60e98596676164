"""Pointwise nonlinearities applied to sinograms.

The physical model is the two-energy beam-hardening term
``F(x) = -ln(sinh(eps x) / (eps x))``; a quadratic ``F(u) = a u**2`` and a
tabulated ``F`` are available as well.
"""

from dataclasses import dataclass, field

import numpy as np

SERIES_CROSSOVER = 1e-3
_ASYMPTOTIC = 20.0

VARIANTS = ("beam-hardening", "quadratic", "table", "zero")


class TableRangeError(ValueError):
    pass


def beam_hardening(x, eps):
    """``-ln(sinh(y) / y)`` with ``y = eps * x``; even, nonpositive, zero at 0."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    y = np.abs(eps * np.asarray(x, dtype=float))
    out = np.empty_like(y)
    small = y < SERIES_CROSSOVER
    big = y >= _ASYMPTOTIC
    mid = ~small & ~big
    y2 = y[small] ** 2
    out[small] = -y2 / 6.0 + y2 * y2 / 180.0
    ym = y[mid]
    out[mid] = -np.log(np.sinh(ym) / ym)
    # sinh(y)/y = e^y (1 - e^{-2y}) / (2y), avoids overflow
    yb = y[big]
    out[big] = -(yb - np.log(2.0 * yb) + np.log1p(-np.exp(-2.0 * yb)))
    return out if out.ndim else float(out)


@dataclass
class BeamModel:
    """Which ``F`` to apply, plus the metal contrast ``alpha`` used for ``f = alpha * chi_D``."""

    variant: str = "beam-hardening"
    eps: float = 1.0
    alpha: float = 1.0
    a: float = 1.0
    table_x: np.ndarray = field(default=None, repr=False)
    table_y: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown nonlinearity variant {self.variant!r}; expected one of {VARIANTS}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.variant == "table":
            if self.table_x is None or self.table_y is None:
                raise ValueError("table variant needs table_x and table_y")
            self.table_x = np.asarray(self.table_x, dtype=float)
            self.table_y = np.asarray(self.table_y, dtype=float)
            if self.table_x.shape != self.table_y.shape or self.table_x.size < 2:
                raise ValueError("table_x and table_y must be equal-length, >= 2 entries")
            if np.any(np.diff(self.table_x) <= 0):
                raise ValueError("table_x must be strictly increasing")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.variant == "beam-hardening":
            return beam_hardening(u, self.eps)
        if self.variant == "quadratic":
            return self.a * u * u
        if self.variant == "zero":
            return np.zeros_like(u)
        lo, hi = self.table_x[0], self.table_x[-1]
        if u.size and (u.min() < lo or u.max() > hi):
            raise TableRangeError(f"input range [{u.min():.6g}, {u.max():.6g}] outside table [{lo:.6g}, {hi:.6g}]")
        return np.interp(u, self.table_x, self.table_y)


def apply_pointwise(sino, model):
    return sino.with_values(model(sino.values))
