import numpy as np
import pytest

from henonlocus.dynamics import Params, Point, backward_xy, forward_xy
from henonlocus.errors import ExitFaceViolation
from henonlocus.leaves import (BoxGeometry, construct_tube_boundary,
                               construct_vtilde_boundary, march_family,
                               parabolic_pullback, trace_leaf)


def test_far_field_leaf_vertical(pstar, rc):
    leaf = trace_leaf(pstar, rc, Point(1e6, 0.0), "plus",
                      np.linspace(0.5, rc.R, 8), max_step=1.0)
    assert np.abs(leaf.xs - 1e6).max() < 1e-3
    assert leaf.drift.max() < 1e-10


def test_leaf_value_conserved_along_box_boundary(pstar, rc):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    leaf = trace_leaf(pstar, rc, Point(rho, 0.0), "plus",
                      [1.0, 3.0, 5.0, rc.R, 2.0, 0.5])
    assert leaf.drift.max() < 1e-10
    # retracing back to a visited parameter reproduces the same point
    again = trace_leaf(pstar, rc, Point(rho, 0.0), "plus", [2.0])
    i = list(leaf.params).index(2.0)
    assert abs(leaf.points[i, 0] - again.points[0, 0]) < 1e-8


def test_leaf_slope_bound_vertical_boundary(pstar, rc):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    leaf = trace_leaf(pstar, rc, Point(rho, 0.0), "plus",
                      np.linspace(0.4, rc.R, 10))
    bound = abs(pstar.a) / (2 * rc.gamma1 * rc.R - 1)
    assert leaf.slope_bound < bound


def test_minus_leaf_slope_bound(pstar, rc):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    leaf = trace_leaf(pstar, rc, Point(0.0, rho), "minus",
                      np.linspace(0.4, rc.R, 10))
    assert leaf.slope_bound < 1.0 / (2 * rc.gamma1 * rc.R - abs(pstar.a))


def test_march_family_batches(pstar, rc):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    seeds = rho * np.exp(2j * np.pi * np.arange(8) / 8)
    xs, ys, slopes, drift = march_family(pstar, rc, seeds, np.zeros(8, complex),
                                         np.full(8, 3.0 + 1.0j), "plus")
    assert drift.max() < 1e-10
    assert (np.abs(xs) > rc.gamma1 * rc.R).all() and (np.abs(xs) < rc.R).all()


def test_vtilde_boundary_exit_faces(pstar, rc):
    reports = construct_vtilde_boundary(pstar, rc, n_seeds=16, n_radii=4, n_rays=4)
    vert, horiz = reports
    assert vert.min_modulus > rc.gamma1 * rc.R and vert.max_modulus < rc.R
    assert horiz.min_modulus > rc.gamma1 * rc.R and horiz.max_modulus < rc.R


def test_tube_boundary_v(pstar, rc, geometry):
    rep = construct_tube_boundary(pstar, rc, "v", n_seeds=12, n_radii=3,
                                  n_rays=4, geometry=geometry)
    assert rep.min_modulus > rc.R3
    assert rep.max_modulus <= rc.gamma1 * rc.R


def test_tube_boundary_h(pstar, rc, geometry):
    rep = construct_tube_boundary(pstar, rc, "h", n_seeds=12, n_radii=3,
                                  n_rays=4, geometry=geometry)
    assert rep.min_modulus > rc.R4
    assert rep.max_modulus <= rc.gamma1 * rc.R


def test_corner_leaves_intersect_once(pstar, rc):
    # one vertical and one horizontal boundary leaf cross exactly once,
    # located by alternating graph evaluation from the corner
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    x, y = rho + 0j, rho + 0j
    for _ in range(8):
        xs, ys, _, _ = march_family(pstar, rc, [rho + 0j], [0j], [y], "plus")
        x_new = xs[0]
        xs2, ys2, _, _ = march_family(pstar, rc, [0j], [rho + 0j], [x_new], "minus")
        y_new = ys2[0]
        if abs(x_new - x) + abs(y_new - y) < 1e-12:
            break
        x, y = x_new, y_new
    assert abs(x_new - x) + abs(y_new - y) < 1e-10
    assert rc.gamma1 * rc.R < abs(x) < rc.R and rc.gamma1 * rc.R < abs(y) < rc.R


def test_parabolic_pullback_tip(pstar, rc):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    grid = np.linspace(-0.9 * rc.delta, 0.9 * rc.delta, 7) + 0j
    leaf = trace_leaf(pstar, rc, Point(rho, 0.0), "plus", grid)
    par = parabolic_pullback(pstar, rc, leaf)
    assert abs(par.tip) < rc.delta
    # tip satisfies the stationarity of the second pulled-back coordinate
    xb, yb = backward_xy(pstar, *map(complex, (leaf.points[3][0], leaf.points[3][1])))
    assert par.curve.points.shape == leaf.points.shape


def test_parabolic_tips_many_leaves(pstar, rc):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    grid = np.linspace(-0.5 * rc.delta, 0.5 * rc.delta, 3) + 0j
    tips = []
    for th in np.linspace(0, 2 * np.pi, 10, endpoint=False):
        leaf = trace_leaf(pstar, rc, Point(rho * np.exp(1j * th), 0.0), "plus", grid)
        par = parabolic_pullback(pstar, rc, leaf, n_seeds=4)
        tips.append(par.tip)
    assert max(abs(t) for t in tips) < rc.delta


def test_box_membership_fast_paths(pstar, rc, geometry):
    assert geometry.in_vtilde(Point(0, 0))
    assert not geometry.in_vtilde(Point(rc.R + 1, 0))
    assert geometry.in_vtilde(Point(rc.gamma1 * rc.R * 0.99, 0))
    assert not geometry.in_vtilde(Point(0.999 * rc.R, 0.2))


def test_box_membership_shell(pstar, rc, geometry):
    rho = 0.5 * (1 + rc.gamma1) * rc.R
    # just inside and outside the vertical boundary leaf at a real slice
    assert geometry.in_vtilde(Point(rho - 0.02, 1.0))
    assert not geometry.in_vtilde(Point(rho + 0.08, 1.0))


def test_inner_tube_membership(pstar, rc, geometry):
    assert geometry.in_bv(Point(0.0, 0.0))
    assert geometry.in_bv(Point(0.95 * rc.gamma2 * rc.R, 0.0))
    assert not geometry.in_bv(Point(1.1 * rc.gamma2 * rc.R, 0.0))
    assert geometry.in_bh(Point(0.0, 0.95 * rc.gamma2 * rc.R))
    assert not geometry.in_bh(Point(0.0, 1.1 * rc.gamma2 * rc.R))


def test_fundamental_domain_membership(pstar, rc, geometry):
    # far strip point: in the horizontal strip but not in H(box)
    assert geometry.in_F(Point(20.0, 0.1))
    # center of the box is in box \ H(box)
    assert geometry.in_F(Point(0.0, 0.0))
    # image of an F point is inside H(box) when its preimage is in the box
    fx, fy = forward_xy(pstar, 0.0, 0.0)
    assert not geometry.in_F(Point(fx, fy)) or not geometry.in_vtilde(Point(0, 0))
