import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from henonlocus.intervals import Interval, iabs

finite = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False)
positive = st.floats(min_value=1e-12, max_value=1e12, allow_nan=False)


@given(finite, finite)
def test_add_contains_point(a, b):
    r = Interval.exact(a) + Interval.exact(b)
    assert r.lo <= a + b <= r.hi


@given(finite, finite)
def test_mul_contains_point(a, b):
    r = Interval.exact(a) * Interval.exact(b)
    assert r.lo <= a * b <= r.hi


@given(finite, positive)
def test_div_contains_point(a, b):
    r = Interval.exact(a) / Interval.exact(b)
    assert r.lo <= a / b <= r.hi


@given(positive)
def test_sqrt_contains_point(a):
    r = Interval.exact(a).sqrt()
    assert r.lo <= math.sqrt(a) <= r.hi


def test_bulk_soundness(rng):
    """10^5 random pairs: point arithmetic lies inside every primitive."""
    a = rng.uniform(-1e3, 1e3, 100_000)
    b = rng.uniform(-1e3, 1e3, 100_000)
    b = np.where(np.abs(b) < 1e-6, 1.0, b)
    for op, iop in ((np.add, lambda x, y: x + y),
                    (np.subtract, lambda x, y: x - y),
                    (np.multiply, lambda x, y: x * y),
                    (np.divide, lambda x, y: x / y)):
        vals = op(a, b)
        for i in range(0, 100_000, 9973):   # spot-check a deterministic stride
            r = iop(Interval.exact(a[i]), Interval.exact(b[i]))
            assert r.lo <= vals[i] <= r.hi
    roots = np.sqrt(np.abs(a))
    for i in range(0, 100_000, 9973):
        r = Interval.exact(abs(a[i])).sqrt()
        assert r.lo <= roots[i] <= r.hi


def test_one_third_roundtrip():
    third = Interval.exact(1.0) / Interval.exact(3.0)
    prod = third * Interval.exact(3.0)
    assert prod.lo <= 1.0 <= prod.hi


def test_division_by_zero_interval():
    with pytest.raises(ZeroDivisionError):
        Interval.exact(1.0) / Interval(-1.0, 1.0)


def test_sq_tight_around_zero():
    r = Interval(-2.0, 1.0).sq()
    assert r.lo == 0.0 and r.hi >= 4.0


def test_iabs_encloses():
    for z in (3 + 4j, -1.5 + 0j, 0.3j, -2.25 - 1.75j):
        r = iabs(z)
        assert r.lo <= abs(z) <= r.hi
        assert r.width < 1e-12 * max(1.0, abs(z))


def test_invalid_interval():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
