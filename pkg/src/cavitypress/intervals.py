"""Closed real intervals used to carry certified enclosures.

Arithmetic rounds outward by a few ulps so that enclosures computed in
floating point stay enclosures.  ``stderr`` tracks an additional Monte-Carlo
standard error when an interval was assembled from sampled points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvariantViolation

_REL = 4e-16


def _down(x: float) -> float:
    if math.isinf(x):
        return x
    return x - abs(x) * _REL - 5e-324


def _up(x: float) -> float:
    if math.isinf(x):
        return x
    return x + abs(x) * _REL + 5e-324


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    stderr: float = 0.0

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise InvariantViolation("interval endpoint is NaN")
        if self.lo > self.hi:
            raise InvariantViolation(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(float(x), float(x))

    @classmethod
    def hull(cls, values) -> "Interval":
        values = [float(v) for v in values]
        return cls(min(values), max(values))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def overlaps(self, other: "Interval", slack: float = 0.0) -> bool:
        return self.lo - slack <= other.hi and other.lo - slack <= self.hi

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return Interval(_down(self.lo + other.lo), _up(self.hi + other.hi),
                        math.hypot(self.stderr, other.stderr))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo, self.stderr)

    def __sub__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(other)
        return self + (-other)

    def scale(self, c: float) -> "Interval":
        a, b = self.lo * c, self.hi * c
        return Interval(_down(min(a, b)), _up(max(a, b)), self.stderr * abs(c))

    def __mul__(self, other):
        if not isinstance(other, Interval):
            return self.scale(float(other))
        prods = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi]
        prods = [0.0 if math.isnan(p) else p for p in prods]
        return Interval(_down(min(prods)), _up(max(prods)))

    __rmul__ = __mul__

    def neg_log(self) -> "Interval":
        """-log of a positive interval (used for information values)."""
        if self.lo < 0:
            raise InvariantViolation("negative probability bound")
        lo = -math.log(self.hi) if self.hi > 0 else math.inf
        hi = -math.log(self.lo) if self.lo > 0 else math.inf
        return Interval(_down(lo), _up(hi))

    def to_json(self) -> dict:
        def enc(x):
            return None if math.isinf(x) else x
        return {"lo": enc(self.lo), "hi": enc(self.hi), "width": enc(self.width), "stderr": self.stderr}


class ProbInterval(Interval):
    """An interval clipped to [0, 1]."""

    def __init__(self, lo, hi, stderr=0.0):
        super().__init__(max(0.0, min(1.0, float(lo))), max(0.0, min(1.0, float(hi))), stderr)

    @classmethod
    def point(cls, x: float) -> "ProbInterval":
        return cls(x, x)

    @classmethod
    def from_ratio_bounds(cls, lo: float, hi: float) -> "ProbInterval":
        # ratios of exactly 0 or 1 come from forced events; keep them degenerate
        return cls(_down(lo) if 0 < lo < 1 else lo, _up(hi) if 0 < hi < 1 else hi)
