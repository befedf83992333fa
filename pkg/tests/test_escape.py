import numpy as np
import pytest

from henonlocus.dynamics import Params, Point, backward_xy, fixed_points, forward_xy, one_step_jacobian
from henonlocus.errors import NotEscaping
from henonlocus.escape import (OK, CotangentPair, defining_w, defining_w_normalized,
                               green, leaf_tangent, log_bottcher_gradient,
                               minus_jets, plus_jets, w_batch)


def _escaping_batch(pstar, rc, rng, n=1000):
    X = rng.uniform(-2 * rc.R, 2 * rc.R, n) + 1j * rng.uniform(-2 * rc.R, 2 * rc.R, n)
    Y = rng.uniform(-2 * rc.R, 2 * rc.R, n) + 1j * rng.uniform(-2 * rc.R, 2 * rc.R, n)
    return X, Y


def test_green_far_field(pstar, rc):
    g = green(pstar, rc, Point(1e6, 0.0), "plus")
    assert abs(g.value - np.log(1e6)) < 1e-4


def test_green_fixed_point_not_escaping(pstar, rc):
    fp, _ = fixed_points(pstar)
    with pytest.raises(NotEscaping):
        green(pstar, rc, fp, "plus", max_depth=10)


def test_green_functional_equation(pstar, rc, rng):
    X, Y = _escaping_batch(pstar, rc, rng)
    b0 = plus_jets(pstar, X, Y, order=0)
    X1, Y1 = forward_xy(pstar, X, Y)
    b1 = plus_jets(pstar, X1, Y1, order=0)
    ok = (b0.status == OK) & (b1.status == OK)
    assert ok.mean() > 0.95
    assert np.abs(b1.green[ok] - 2 * b0.green[ok]).max() < 1e-8


def test_green_minus_functional_equation(pstar, rc, rng):
    X, Y = _escaping_batch(pstar, rc, rng)
    b0 = minus_jets(pstar, X, Y, order=0)
    Xb, Yb = backward_xy(pstar, X, Y)
    b1 = minus_jets(pstar, Xb, Yb, order=0)
    ok = (b0.status == OK) & (b1.status == OK)
    assert np.abs(b1.green[ok] - 2 * b0.green[ok]).max() < 1e-8


def test_gradient_far_field(pstar, rc):
    pair = log_bottcher_gradient(pstar, rc, Point(1e6, 0.0), "plus")
    assert abs(pair.dx - 1e-6) < 1e-9
    assert abs(pair.dy) < 1e-9


def test_gradient_pullback_identity(pstar, rc, rng):
    X, Y = _escaping_batch(pstar, rc, rng)
    b0 = plus_jets(pstar, X, Y, order=1)
    X1, Y1 = forward_xy(pstar, X, Y)
    b1 = plus_jets(pstar, X1, Y1, order=1)
    ok = (b0.status == OK) & (b1.status == OK)
    m11, m12, m21, m22 = one_step_jacobian(pstar, X, Y)
    rx = m11 * b1.lx + m21 * b1.ly - 2 * b0.lx
    ry = m12 * b1.lx + m22 * b1.ly - 2 * b0.ly
    assert max(np.abs(rx[ok]).max(), np.abs(ry[ok]).max()) < 1e-8


def test_gradient_matches_finite_differences_of_green(pstar, rc, rng):
    # central differences of the escape rate give the real part of the pair
    n = 500
    X = rng.uniform(1.1 * rc.R, 2 * rc.R, n) * np.exp(2j * np.pi * rng.random(n))
    Y = rng.uniform(0, rc.R, n) * np.exp(2j * np.pi * rng.random(n))
    b = plus_jets(pstar, X, Y, order=1)
    h = 1e-5
    gpx = plus_jets(pstar, X + h, Y, order=0).green
    gmx = plus_jets(pstar, X - h, Y, order=0).green
    gpy = plus_jets(pstar, X, Y + h, order=0).green
    gmy = plus_jets(pstar, X, Y - h, order=0).green
    ok = b.status == OK
    assert np.abs((gpx - gmx) / (2 * h) - b.lx.real)[ok].max() < 1e-5
    assert np.abs((gpy - gmy) / (2 * h) - b.ly.real)[ok].max() < 1e-5


def test_hessian_matches_finite_differences_of_gradient(pstar, rc):
    z = Point(4.7 + 0.4j, 1.1 - 0.6j)
    b = plus_jets(pstar, [z.x], [z.y], order=2)
    assert b.status[0] == OK
    h = 1e-6
    bp = plus_jets(pstar, [z.x + h], [z.y], order=1)
    bm = plus_jets(pstar, [z.x - h], [z.y], order=1)
    assert abs((bp.lx[0] - bm.lx[0]) / (2 * h) - b.hxx[0]) < 1e-6
    assert abs((bp.ly[0] - bm.ly[0]) / (2 * h) - b.hxy[0]) < 1e-6


def test_dyadic_convergence_geometric(pstar, rc, rng):
    # successive dyadic gaps along forced-depth runs decay geometrically
    n = 200
    X = rng.uniform(1.05 * rc.R, 1.5 * rc.R, n) * np.exp(2j * np.pi * rng.random(n))
    Y = X * rng.uniform(0, 0.9, n)
    prev = None
    gaps = []
    est = []
    for depth in range(1, 7):
        b = plus_jets(pstar, X, Y, tol=0.0, max_depth=depth, order=1)
        est.append((b.lx.copy(), b.ly.copy()))
    for k in range(1, 6):
        gaps.append(np.maximum(np.abs(est[k][0] - est[k - 1][0]),
                               np.abs(est[k][1] - est[k - 1][1])))
    g2 = np.array(gaps[2:])
    g1 = np.array(gaps[1:-1])
    ratio = np.where(g1 > 1e-15, g2 / np.maximum(g1, 1e-300), 0.0)
    assert np.nanmax(ratio) < 0.75


def test_w_transversal_far_from_strips(pstar, rc):
    z = Point(2 * rc.R, 0.6 * rc.R)
    wn = defining_w_normalized(pstar, rc, z)
    assert wn > 1e-6


def test_w_small_at_traced_tangency(pstar, rc):
    from henonlocus.locus import solve_tangency_on_line
    lp = solve_tangency_on_line(pstar, rc, 4.9j)
    assert lp.w_residual < 1e-8


def test_w_zero_set_invariance(pstar, rc):
    from henonlocus.locus import repolish, solve_tangency_on_line
    lp = solve_tangency_on_line(pstar, rc, 4.6j, want_diagnostics=False)
    fx, fy = forward_xy(pstar, lp.x, lp.y)
    X, Y, resid = repolish(pstar, rc, [fx], [fy], max_iter=3)
    assert resid[0] < 1e-10


def test_leaf_tangent_orthogonal_and_far_field(pstar, rc):
    tx, ty = leaf_tangent(pstar, rc, Point(1e6, 0.0), "plus")
    assert abs(tx) < 1e-6 and abs(abs(ty) - 1.0) < 1e-9
    tmx, tmy = leaf_tangent(pstar, rc, Point(0.0, 1e6), "minus")
    assert abs(tmy) < 1e-6 and abs(abs(tmx) - 1.0) < 1e-9
    pair = log_bottcher_gradient(pstar, rc, Point(9.0, 2.0), "plus")
    t = pair.tangent()
    assert abs(t[0] * pair.dx + t[1] * pair.dy) < 1e-15


def test_leaf_tangent_vertical_cone(pstar, rc, rng):
    # vertical-like zone of the plus foliation: |dx| <= |dy| for the tangent
    n = 1000
    X = rng.uniform(1.02 * rc.R, 1.8 * rc.R, n) * np.exp(2j * np.pi * rng.random(n))
    Y = X * rng.uniform(0.2, 0.95, n)
    b = plus_jets(pstar, X, Y, order=1)
    ok = b.status == OK
    tx, ty = -b.ly[ok], b.lx[ok]
    assert (np.abs(tx) <= np.abs(ty)).all()
