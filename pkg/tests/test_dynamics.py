import numpy as np
import pytest

from henonlocus.dynamics import (MAX_ITERATE, Params, Point, RegionTag, classify,
                                 classify_xy, escape_time, fixed_points,
                                 forward_xy, henon_backward, henon_forward,
                                 iterate, jacobian, one_step_jacobian)
from henonlocus.errors import EscapeOverflow


def test_forward_substitution(pstar):
    assert henon_forward(pstar, Point(0, 0)).as_tuple() == (-25 + 0j, 0j)
    assert henon_forward(pstar, Point(1, 1)).as_tuple() == (-24.1 + 0j, 1 + 0j)


def test_backward_inverts_first_example(pstar):
    assert henon_backward(pstar, Point(-25, 0)).as_tuple() == (0j, 0j)


def test_params_reject_zero_a():
    with pytest.raises(ValueError):
        Params(-25.0, 0.0)


def test_roundtrip_random_points(pstar, rng):
    x = rng.uniform(-8, 8, 1000) + 1j * rng.uniform(-8, 8, 1000)
    y = rng.uniform(-8, 8, 1000) + 1j * rng.uniform(-8, 8, 1000)
    fx, fy = forward_xy(pstar, x, y)
    bx, by = pstar.a, None
    from henonlocus.dynamics import backward_xy
    bx, by = backward_xy(pstar, fx, fy)
    err = np.maximum(np.abs(bx - x), np.abs(by - y))
    assert err.max() < 1e-12


def test_diagonal_fixed_point(pstar):
    fp, _ = fixed_points(pstar)
    assert abs(fp.x - 5.58016) < 1e-4
    back = henon_backward(pstar, fp)
    assert abs(back.x - fp.x) < 1e-12 and abs(back.y - fp.y) < 1e-12


def test_iterate_identity_and_inverse(pstar, rc, rng):
    # round-trip error scales with the square of the largest intermediate
    # coordinate, so the strict tolerance only holds at shallow depth for
    # escaping orbits (the inverse is exact in formula, not in doubles)
    z = Point(1.3 + 0.2j, -0.7 + 1j)
    assert iterate(pstar, z, 0).as_tuple() == z.as_tuple()
    for n in (1, 2):
        for sgn in (1, -1):
            w = iterate(pstar, z, sgn * n)
            back = iterate(pstar, w, -sgn * n)
            assert abs(back.x - z.x) < 1e-9 * max(1, abs(z.x))
            assert abs(back.y - z.y) < 1e-9 * max(1, abs(z.y))
    w = iterate(pstar, z, 3)
    back = iterate(pstar, w, -3)
    assert abs(back.x - z.x) < 1e-5 and abs(back.y - z.y) < 1e-4


def test_iterate_fixed_point_period7(pstar):
    fp, _ = fixed_points(pstar)
    out = iterate(pstar, fp, 7)
    assert abs(out.x - fp.x) < 1e-8 and abs(out.y - fp.y) < 1e-8


def test_iterate_guards(pstar):
    with pytest.raises(ValueError):
        iterate(pstar, Point(0, 0), MAX_ITERATE + 1)
    with pytest.raises(EscapeOverflow):
        iterate(pstar, Point(1e80, 0), 3)


def test_record_orbit(pstar):
    final, orbit = iterate(pstar, Point(0, 0), 3, record_orbit=True)
    assert len(orbit) == 4
    assert orbit[-1].as_tuple() == final.as_tuple()


def test_one_step_jacobian_matrix(pstar):
    j = jacobian(pstar, Point(2 + 1j, -3), 1)
    assert j.m11 == 2 * (2 + 1j) and j.m12 == -pstar.a
    assert j.m21 == 1 and j.m22 == 0
    assert abs(j.det - pstar.a) < 1e-12 * abs(pstar.a)
    assert abs(j.det_from_entries - j.det) < 1e-12 * abs(j.det)


def test_jacobian_determinant_powers(pstar):
    z = fixed_points(pstar)[0]
    for n in range(-10, 11):
        d = jacobian(pstar, z, n).det
        assert abs(d - pstar.a ** n) < 1e-9 * abs(pstar.a ** n)


def test_jacobian_matches_finite_differences(pstar):
    z = Point(1.1 + 0.4j, -0.8 + 0.2j)
    j = jacobian(pstar, z, 1)
    h = 1e-6
    fx0, fy0 = forward_xy(pstar, z.x, z.y)
    fxx, _ = forward_xy(pstar, z.x + h, z.y)
    fxy, _ = forward_xy(pstar, z.x, z.y + h)
    assert abs((fxx - fx0) / h - j.m11) < 1e-5
    assert abs((fxy - fx0) / h - j.m12) < 1e-7


def test_classify_regions(pstar, rc):
    R = rc.R
    assert classify(rc, Point(2 * R, 0)) is RegionTag.VPLUS
    assert classify(rc, Point(0, 2 * R)) is RegionTag.VMINUS
    assert classify(rc, Point(0, 0)) is RegionTag.V
    # tie on |x| = |y| > R resolves to V+
    assert classify(rc, Point(2 * R, 2 * R)) is RegionTag.VPLUS


def test_filtration_invariance(pstar, rc, rng):
    R = rc.R
    n = 10_000
    # points in V+
    x = (rng.uniform(1.01 * R, 3 * R, n)) * np.exp(2j * np.pi * rng.random(n))
    y = x * rng.uniform(0, 1, n)
    fx, fy = forward_xy(pstar, x, y)
    assert (classify_xy(R, fx, fy) == 1).all()
    # points in V-, backward invariance
    from henonlocus.dynamics import backward_xy
    y2 = (rng.uniform(1.01 * R, 3 * R, n)) * np.exp(2j * np.pi * rng.random(n))
    x2 = y2 * rng.uniform(0, 1, n)
    bx, by = backward_xy(pstar, x2, y2)
    assert (classify_xy(R, bx, by) == 2).all()


def test_cone_invariance(pstar, rc, rng):
    n = 2000
    x = rng.uniform(rc.delta * 1.05, rc.R, n) * np.exp(2j * np.pi * rng.random(n))
    y = rng.uniform(0, rc.R, n) * np.exp(2j * np.pi * rng.random(n))
    # horizontal vectors |xi| >= |eta|
    xi = np.exp(2j * np.pi * rng.random(n))
    eta = xi * rng.uniform(0, 1, n) * np.exp(2j * np.pi * rng.random(n))
    xi2 = 2 * x * xi - pstar.a * eta
    eta2 = xi
    norm0 = np.maximum(np.abs(xi), np.abs(eta))
    norm1 = np.maximum(np.abs(xi2), np.abs(eta2))
    assert (norm1 >= (2 * np.abs(x) - abs(pstar.a)) * norm0 - 1e-12).all()
    assert (np.abs(xi2) > np.abs(eta2)).all()   # strictly inside the cone
    # vertical cone under the inverse map for |y| > delta
    m = one_step_jacobian(pstar, x, y, backward=True)
    vx = eta * rng.uniform(0, 1, n)
    vy = eta
    wx_ = m[0] * vx + m[1] * vy
    wy_ = m[2] * vx + m[3] * vy
    mask = np.abs(y) > rc.delta
    gain = (2 * np.abs(y[mask]) - 1) / abs(pstar.a)
    n0 = np.maximum(np.abs(vx[mask]), np.abs(vy[mask]))
    n1 = np.maximum(np.abs(wx_[mask]), np.abs(wy_[mask]))
    assert (n1 > gain * n0 * (1 - 1e-12)).all()
    assert (np.abs(wy_[mask]) > np.abs(wx_[mask])).all()


def test_escape_time(pstar, rc):
    assert escape_time(rc, pstar, Point(2 * rc.R, 0), "fwd") == 0
    assert escape_time(rc, pstar, Point(0, 0), "fwd") == 1
    # the fixed point is a saddle: shadow drift grows ~11^n forward and ~90^n
    # backward, which bounds the double-precision "bounded at depth" horizon
    fp, _ = fixed_points(pstar)
    assert escape_time(rc, pstar, fp, "fwd", max_iter=12) is None
    assert escape_time(rc, pstar, fp, "bwd", max_iter=6) is None
