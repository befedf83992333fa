import itertools

import numpy as np
import pytest

from henonlocus.coding import (SymbolCode, component_count, conjugacy_check,
                               delta_region, delta_center, h_label, itinerary,
                               label_tubes, nested_component_boxes,
                               periodic_point, tube_width,
                               horizontal_tube_center_y, vertical_tube_center_x)
from henonlocus.dynamics import Params, Point, fixed_points, forward_xy, iterate
from henonlocus.errors import OrbitLeftBox


def test_symbol_code_roundtrip_format():
    code = SymbolCode((0, 1, 1), (1, 0))
    assert str(code) == "lam=110|om=10"
    assert SymbolCode.parse(str(code)) == code
    assert SymbolCode.parse("lam=e|om=e") == SymbolCode((), ())


def test_label_tubes(pstar, rc):
    tl = label_tubes(pstar, rc)
    assert tl.rep0.real < tl.rep1.real
    assert rc.eta2 < abs(tl.centers[0]) < rc.eta1
    assert rc.eta2 < abs(tl.centers[1]) < rc.eta1


def test_label_tubes_refinement_invariant(pstar, rc):
    a = label_tubes(pstar, rc, resolution=150)
    b = label_tubes(pstar, rc, resolution=300)
    assert abs(a.rep0 - b.rep0) < 1e-12
    assert (a.rep0.real, a.rep1.real) == (b.rep0.real, b.rep1.real)


def test_fixed_point_labels_and_itinerary(pstar, rc, geometry):
    fp_plus, fp_minus = fixed_points(pstar)
    assert h_label(pstar, fp_plus) == 1
    assert h_label(pstar, fp_minus) == 0
    code = itinerary(pstar, rc, fp_plus, 4, 4, geometry)
    assert code.backward == (1, 1, 1, 1) and code.forward == (1, 1, 1, 1)
    code0 = itinerary(pstar, rc, fp_minus, 4, 4, geometry)
    assert code0.backward == (0, 0, 0, 0) and code0.forward == (0, 0, 0, 0)


def test_itinerary_shift_equivariance(pstar, rc, geometry):
    orb = periodic_point(pstar, rc, (0, 1, 1))
    z = orb.phase_point
    c0 = itinerary(pstar, rc, z, 6, 3, geometry)
    c1 = itinerary(pstar, rc, iterate(pstar, z, 1), 5, 4, geometry)
    # the orbit label sequence shifts: forward word of H(z) drops the first
    # symbol of z's forward word; its backward word gains it
    assert c1.backward == c0.backward[1:]
    assert c1.forward[1:] == c0.forward[:3]


def test_itinerary_leaves_box(pstar, rc, geometry):
    with pytest.raises(OrbitLeftBox):
        itinerary(pstar, rc, Point(2.0, 0.0), 2, 0, geometry)


def test_periodic_fixed_words(pstar, rc):
    fp_plus, fp_minus = fixed_points(pstar)
    o1 = periodic_point(pstar, rc, (1,))
    o0 = periodic_point(pstar, rc, (0,))
    assert abs(o1.points[0].x - fp_plus.x) < 1e-9
    assert abs(o0.points[0].x - fp_minus.x) < 1e-9


def test_periodic_word_01_limit_a_to_zero(pstar, rc):
    # the degenerate-map period-2 orbit solves x^2 + x + c + 1 = 0
    roots = np.roots([1, 1, -25 + 1])
    for a in (1e-2, 1e-3, 1e-4):
        p = Params(-25.0, a)
        orb = periodic_point(p, rc, (0, 1))
        xs = sorted([orb.points[0].x.real, orb.points[1].x.real])
        assert abs(xs[0] - roots.min()) < 3 * a
        assert abs(xs[1] - roots.max()) < 3 * a


def test_periodic_roundtrip_all_words_q_le_5(pstar, rc, geometry):
    for q in range(1, 6):
        pts = set()
        for word in itertools.product((0, 1), repeat=q):
            orb = periodic_point(pstar, rc, word)
            assert orb.residual < 1e-10
            code = itinerary(pstar, rc, orb.phase_point, q, 0, geometry)
            assert code.backward == word
            pts.add((round(orb.points[0].x.real, 8), round(orb.points[0].x.imag, 8),
                     round(orb.points[0].y.real, 8)))
        assert len(pts) == 2 ** q   # all 2^q fixed points of H^q are distinct


def test_component_count_powers_of_two(pstar, rc):
    assert component_count(pstar, rc, 0) == 1
    assert component_count(pstar, rc, 1) == 2
    assert component_count(pstar, rc, 5) == 32


def test_component_width_shrinks_by_cone_factor(pstar, rc):
    w = [tube_width(pstar, rc, n) for n in (1, 2, 3, 4)]
    factor = 2 * rc.gamma1 * rc.R - abs(pstar.a)
    for a, b in zip(w, w[1:]):
        assert b < a / 2     # crude monotone shrink
    # asymptotic shrink at least the cone bound within sampling slack
    assert w[3] / w[2] < 1.0 / (2 * rc.eta2 - abs(pstar.a)) * 1.5


def test_tube_centers_on_stable_slice(pstar, rc):
    fp_plus, _ = fixed_points(pstar)
    x = vertical_tube_center_x(pstar, (1,) * 8, fp_plus.y)
    assert abs(x - fp_plus.x) < 1e-6
    y = horizontal_tube_center_y(pstar, (1,) * 8, fp_plus.x)
    assert abs(y - fp_plus.y) < 1e-6


def test_delta_region_identity_code(pstar, rc):
    dr = delta_region(pstar, rc, SymbolCode((), ()), grid=3)
    assert abs(dr.center.x) < 1e-9 and abs(dr.center.y) < 1e-9
    assert dr.min_partial_F == np.inf and dr.min_partial_G == np.inf


def test_delta_region_straightening_partials(pstar, rc):
    dr = delta_region(pstar, rc, SymbolCode((0,), (1,)), grid=3)
    assert dr.min_partial_F > 1.0
    assert dr.min_partial_G > 1.0
    # forward image of a backward-coded sample lands in the central tube zone
    z = dr.center
    fx, fy = forward_xy(pstar, z.x, z.y)
    assert abs(fx) < rc.gamma2 * rc.R


def test_delta_region_nesting(pstar, rc, geometry):
    inner = delta_region(pstar, rc, SymbolCode((1, 0), (1,)), grid=3)
    for z, _ in inner.samples:
        lam = []
        x, y = z.x, z.y
        for _ in range(2):
            x, y = forward_xy(pstar, x, y)
            lam.append(h_label(pstar, Point(x, y)))
        assert tuple(lam[:1]) == (1,)       # inside the depth-1 suffix tube
        assert tuple(lam) == (1, 0)         # full depth-ordered backward word


def test_delta_centers_distinct(pstar, rc):
    centers = []
    for code in [SymbolCode((s,), ()) for s in (0, 1)] + \
                [SymbolCode((), (s,)) for s in (0, 1)]:
        centers.append(delta_center(pstar, rc, code))
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            d = abs(centers[i].x - centers[j].x) + abs(centers[i].y - centers[j].y)
            assert d > 0.5


def test_conjugacy_periodic_word(pstar, rc):
    d = conjugacy_check(pstar, rc, (0, 1, 1, 0, 1, 1, 0), depth=3)
    assert d < 1e-8


def test_conjugacy_random_words_below_tube_diameter(pstar, rc, rng):
    # applying H costs one nesting level, so the equivariance defect is
    # bounded by the tube diameter one level up
    diam = tube_width(pstar, rc, 3)
    for _ in range(5):
        word = tuple(rng.integers(0, 2, 11))
        d = conjugacy_check(pstar, rc, word, depth=4)
        assert d < diam


def test_conjugacy_constant_word_matches_fixed_point(pstar, rc):
    d = conjugacy_check(pstar, rc, (1,) * 9, depth=4)
    assert d < 1e-10
