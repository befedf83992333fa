"""Outward-rounded interval arithmetic for inequality certification.

Directed rounding is emulated with one-ulp `math.nextafter` nudges after each
primitive, which is conservative (1 ulp wider than true directed rounding).
Only the operations needed by the region certificates are provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_INF = math.inf


def _down(v: float) -> float:
    return v if math.isinf(v) else math.nextafter(v, -_INF)


def _up(v: float) -> float:
    return v if math.isinf(v) else math.nextafter(v, _INF)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def exact(v) -> "Interval":
        v = float(v)
        return Interval(v, v)

    @staticmethod
    def around(v) -> "Interval":
        """Interval of width 2 ulp around a computed double."""
        v = float(v)
        return Interval(_down(v), _up(v))

    # -- queries --------------------------------------------------------------

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def strictly_positive(self) -> bool:
        return self.lo > 0.0

    def nonnegative(self) -> bool:
        return self.lo >= 0.0

    def strictly_negative(self) -> bool:
        return self.hi < 0.0

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"

    # -- arithmetic -----------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "Interval":
        return other if isinstance(other, Interval) else Interval.exact(other)

    def __add__(self, other):
        o = self._coerce(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        prods = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_down(min(prods)), _up(max(prods)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise ZeroDivisionError(f"division by interval containing 0: {o}")
        quots = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_down(min(quots)), _up(max(quots)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def sqrt(self):
        if self.lo < 0.0:
            raise ValueError(f"sqrt of interval with negative part: {self}")
        return Interval(_down(math.sqrt(self.lo)), _up(math.sqrt(self.hi)))

    def sq(self):
        """Square, tight around 0 unlike self * self."""
        alo, ahi = abs(self.lo), abs(self.hi)
        lo = 0.0 if self.lo <= 0.0 <= self.hi else min(alo, ahi)
        hi = max(alo, ahi)
        return Interval(max(0.0, _down(lo * lo)), _up(hi * hi))

    def intersect(self, other) -> "Interval | None":
        o = self._coerce(other)
        lo, hi = max(self.lo, o.lo), min(self.hi, o.hi)
        return Interval(lo, hi) if lo <= hi else None


def iabs(v: complex) -> Interval:
    """Enclosure of |v| for a complex double."""
    if v.imag == 0.0:
        return Interval.exact(abs(v.real))
    if v.real == 0.0:
        return Interval.exact(abs(v.imag))
    return (Interval.around(v.real).sq() + Interval.around(v.imag).sq()).sqrt()
