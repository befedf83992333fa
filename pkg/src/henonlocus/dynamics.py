"""Core Henon dynamics: the map H(x,y) = (x^2 + c - a*y, x), its inverse,
iterates, Jacobians and the Hubbard filtration V / V+ / V-.

All operations are pure; scalar entry points work on `Point`, batch variants
on numpy complex arrays.  Vector norm throughout is max(|xi|, |eta|), matching
the cone estimates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EscapeOverflow

# Orbit coordinates beyond this modulus are treated as escaped to infinity.
OVERFLOW_THRESHOLD = 1e150
MAX_ITERATE = 1024


@dataclass(frozen=True)
class Params:
    """Map parameters (c, a), both complex; a != 0 so the inverse exists."""

    c: complex
    a: complex

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("a = 0: inverse map does not exist")
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "a", complex(self.a))


@dataclass(frozen=True)
class Point:
    x: complex
    y: complex

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("non-finite coordinates")

    def as_tuple(self):
        return complex(self.x), complex(self.y)


@dataclass(frozen=True)
class JacobianMatrix:
    """Chain-rule derivative with a separately accumulated determinant.

    The entry-based 2x2 determinant of a deep chain product cancels
    catastrophically (entries grow like the expansion while the determinant
    stays a^n), so the determinant is accumulated stably step by step and
    stored; `det_from_entries` is the raw cross-check, reliable only at
    shallow depth.
    """

    m11: complex
    m12: complex
    m21: complex
    m22: complex
    det_stored: complex = None

    def __post_init__(self):
        if self.det_stored is None:
            object.__setattr__(self, "det_stored", self.det_from_entries)

    @property
    def det(self) -> complex:
        return self.det_stored

    @property
    def det_from_entries(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    def apply(self, v):
        return (self.m11 * v[0] + self.m12 * v[1],
                self.m21 * v[0] + self.m22 * v[1])

    def apply_transpose(self, v):
        return (self.m11 * v[0] + self.m21 * v[1],
                self.m12 * v[0] + self.m22 * v[1])


class RegionTag(enum.Enum):
    V = "V"
    VPLUS = "V+"
    VMINUS = "V-"


def forward_xy(p: Params, x, y):
    """One forward step on raw coordinates (works on scalars and arrays)."""
    return x * x + p.c - p.a * y, x


def backward_xy(p: Params, x, y):
    """One backward step: H^{-1}(x, y) = (y, (y^2 + c - x)/a)."""
    return y, (y * y + p.c - x) / p.a


def henon_forward(p: Params, z: Point) -> Point:
    x, y = forward_xy(p, z.x, z.y)
    return Point(x, y)


def henon_backward(p: Params, z: Point) -> Point:
    x, y = backward_xy(p, z.x, z.y)
    return Point(x, y)


def iterate(p: Params, z: Point, n: int, record_orbit: bool = False,
            max_n: int = MAX_ITERATE):
    """H^n(z) with overflow guard; n may be negative, n = 0 is the identity.

    Returns the final point, or (final, orbit) with orbit including both
    endpoints when record_orbit is set.
    """
    if abs(n) > max_n:
        raise ValueError(f"|n| = {abs(n)} exceeds the configured maximum {max_n}")
    x, y = z.x, z.y
    orbit = [Point(x, y)] if record_orbit else None
    step = forward_xy if n >= 0 else backward_xy
    for _ in range(abs(n)):
        x, y = step(p, x, y)
        if max(abs(x), abs(y)) > OVERFLOW_THRESHOLD:
            raise EscapeOverflow("escaped-to-infinity")
        if record_orbit:
            orbit.append(Point(x, y))
    final = Point(x, y)
    return (final, orbit) if record_orbit else final


def one_step_jacobian(p: Params, x, y, backward=False):
    """DH (or DH^{-1}) at (x, y) as entry tuple (m11, m12, m21, m22)."""
    if backward:
        return 0.0 + 0j, 1.0 + 0j, -1.0 / p.a, 2.0 * y / p.a
    return 2.0 * x, -p.a, 1.0 + 0j, 0.0 + 0j


def jacobian(p: Params, z: Point, n: int, max_n: int = MAX_ITERATE) -> JacobianMatrix:
    """Chain-rule Jacobian of H^n at z; n = 0 gives the identity."""
    if abs(n) > max_n:
        raise ValueError(f"|n| = {abs(n)} exceeds the configured maximum {max_n}")
    x, y = z.x, z.y
    m = (1.0 + 0j, 0.0 + 0j, 0.0 + 0j, 1.0 + 0j)
    det = 1.0 + 0j
    backward = n < 0
    step = backward_xy if backward else forward_xy
    for _ in range(abs(n)):
        j = one_step_jacobian(p, x, y, backward=backward)
        m = (j[0] * m[0] + j[1] * m[2], j[0] * m[1] + j[1] * m[3],
             j[2] * m[0] + j[3] * m[2], j[2] * m[1] + j[3] * m[3])
        det = det / p.a if backward else det * p.a
        x, y = step(p, x, y)
        if max(abs(x), abs(y)) > OVERFLOW_THRESHOLD:
            raise EscapeOverflow("escaped-to-infinity")
    return JacobianMatrix(*m, det_stored=det)


def classify_xy(R: float, x, y):
    """Filtration tag on raw coordinates; returns int array 0=V, 1=V+, 2=V-.

    Ties on the boundary circles resolve toward V first, then V+.
    """
    x = np.asarray(x)
    ax, ay = np.abs(x), np.abs(y)
    tag = np.full(ax.shape, 2, dtype=np.int8)
    in_v = (ax <= R) & (ay <= R)
    in_plus = ~in_v & (ax > R) & (ax >= ay)
    tag[in_v] = 0
    tag[in_plus] = 1
    return tag


_TAGS = (RegionTag.V, RegionTag.VPLUS, RegionTag.VMINUS)


def classify(rc, z: Point) -> RegionTag:
    return _TAGS[int(classify_xy(rc.R, z.x, z.y))]


def escape_time(rc, p: Params, z: Point, direction: str = "fwd",
                max_iter: int = 256):
    """Smallest n <= max_iter with H^{+-n}(z) in V+- ; None if bounded-at-depth."""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    x, y = z.x, z.y
    fwd = direction == "fwd"
    want = 1 if fwd else 2
    step = forward_xy if fwd else backward_xy
    for n in range(max_iter + 1):
        if int(classify_xy(rc.R, x, y)) == want:
            return n
        if n == max_iter:
            break
        x, y = step(p, x, y)
        if max(abs(x), abs(y)) > OVERFLOW_THRESHOLD:
            return n + 1
    return None


def fixed_points(p: Params):
    """The two fixed points (x, x), roots of x^2 - (1+a)x + c = 0."""
    s = 1.0 + p.a
    d = np.sqrt(complex(s * s - 4.0 * p.c))
    return Point((s + d) / 2.0, (s + d) / 2.0), Point((s - d) / 2.0, (s - d) / 2.0)
