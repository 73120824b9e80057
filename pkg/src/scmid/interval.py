"""Closed float intervals with outward rounding.

Every arithmetic result is widened by one ulp on each side, which encloses
the round-to-nearest error of the underlying float operation.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import inf, nextafter

__all__ = ["Interval", "down", "up"]


def down(x: float) -> float:
    return nextafter(x, -inf)


def up(x: float) -> float:
    return nextafter(x, inf)


class Interval:
    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        self.lo = lo
        self.hi = lo if hi is None else hi

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> "Interval":
        x = float(value)
        if Fraction(x) == value:
            return cls(x, x)
        return cls(down(x), up(x))

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        if not self.lo <= m <= self.hi:
            m = self.lo
        return m

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(down(self.lo + other.lo), up(self.hi + other.hi))

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(down(self.lo - other.hi), up(self.hi - other.lo))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        if a >= 0 and c >= 0:
            lo, hi = a * c, b * d
        else:
            p = (a * c, a * d, b * c, b * d)
            lo, hi = min(p), max(p)
        return Interval(down(lo), up(hi))

    def scale(self, c: float) -> "Interval":
        """Multiply by an exactly representable float."""
        if c >= 0:
            return Interval(down(self.lo * c), up(self.hi * c))
        return Interval(down(self.hi * c), up(self.lo * c))

    def __pow__(self, k: int) -> "Interval":
        if k == 1:
            return self
        if k == 0:
            return Interval(1.0, 1.0)
        if k % 2 == 0:
            a, b = abs(self.lo), abs(self.hi)
            lo = 0.0 if self.contains_zero() else min(a, b)
            hi = max(a, b)
            lo_p, hi_p = lo ** k, hi ** k
            # pow is not correctly rounded; widen by a few ulps
            return Interval(max(0.0, _ulps_down(lo_p, k)), _ulps_up(hi_p, k))
        lo_p, hi_p = self.lo ** k, self.hi ** k
        return Interval(_ulps_down(lo_p, k), _ulps_up(hi_p, k))

    def divide(self, other: "Interval") -> "Interval":
        """Quotient; ``other`` must not contain zero."""
        c, d = other.lo, other.hi
        if c <= 0.0 <= d:
            raise ZeroDivisionError("divisor interval contains zero")
        q = (self.lo / c, self.lo / d, self.hi / c, self.hi / d)
        return Interval(down(min(q)), up(max(q)))

    def sqrt(self) -> "Interval":
        lo = max(self.lo, 0.0)
        return Interval(max(0.0, down(math.sqrt(lo))), up(math.sqrt(self.hi)))

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def interior_of(self, other: "Interval") -> bool:
        return other.lo < self.lo and self.hi < other.hi

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))


def _ulps_down(x: float, k: int) -> float:
    for _ in range(k + 1):
        x = down(x)
    return x


def _ulps_up(x: float, k: int) -> float:
    for _ in range(k + 1):
        x = up(x)
    return x
