import math
from fractions import Fraction

import numpy as np
import pytest

from henonlocus.dynamics import Params
from henonlocus.errors import EmptyWindow
from henonlocus.region import (BETA_DEFAULT, GAMMA1_DEFAULT, GAMMA2_DEFAULT,
                               beta_exact, certify_chain, hov_beta_membership,
                               r1_lower_bound, radius_window, region_constants,
                               sweep)


def test_membership_margin(pstar):
    member, margin = hov_beta_membership(pstar, 18.75)
    assert member
    assert abs(margin - 2.3125) < 1e-12


def test_membership_boundary():
    member, margin = hov_beta_membership(Params(-22.6875, 0.1), 18.75)
    assert not member
    assert abs(margin) < 1e-12


def test_classic_hov_beta2():
    member, _ = hov_beta_membership(Params(-3.0, 0.01), 2.0)
    assert member


def test_beta_formula_exact_rational():
    assert beta_exact() == Fraction(75, 4)
    assert float(beta_exact()) == 18.75


def test_radius_window_reference(pstar):
    w = radius_window(pstar)
    assert abs(w.lo - 7.17) < 0.01
    assert abs(w.hi - 7.29) < 0.01
    assert w.lo > r1_lower_bound(pstar)


def test_radius_window_degenerate_boundary():
    a = 0.1
    p = Params(-18.75 * (1 + a) ** 2, a)
    w = radius_window(p)
    target = 6.25 * (1 + a)
    assert abs(w.mid - target) <= 1e-9 * target
    assert w.width <= 1e-9 * target


def test_radius_window_empty():
    with pytest.raises(EmptyWindow):
        radius_window(Params(-3.0, 0.1))


def test_radius_window_monotone_in_c():
    widths = []
    for c in np.linspace(23, 60, 12):
        w = radius_window(Params(-c, 0.1))
        widths.append(w.hi - w.lo)
    assert all(b >= a - 1e-12 for a, b in zip(widths, widths[1:]))


def test_region_constants_reference(pstar, rc):
    assert abs(rc.R - 7.2269) < 1e-3
    assert rc.delta == 0.55
    assert abs(rc.eta1 - math.sqrt(25 + rc.R * 1.1)) < 1e-12
    assert abs(rc.eta2 - math.sqrt(25 - rc.R * 1.1)) < 1e-12
    assert 0 < rc.gamma2 * rc.R <= rc.eta2 < rc.eta1 <= rc.gamma1 * rc.R < rc.R
    assert 1 + 0.1 <= rc.R3 < rc.gamma2 * rc.R
    assert 1 + 0.1 <= rc.R4 < rc.gamma2 * rc.R


def test_degenerate_boundary_chain_collapses():
    a = 0.1
    rcb = region_constants(Params(-18.75 * (1 + a) ** 2, a))
    assert abs(rcb.eta1 - rcb.gamma1 * rcb.R) < 1e-7
    assert abs(rcb.eta2 - rcb.gamma2 * rcb.R) < 1e-7


def test_certify_chain_reference(pstar):
    rep = certify_chain(pstar)
    assert rep.status == "certified"
    assert rep.row("hov_beta").margin.lo > 2.31
    for name in ("chain_gamma2R_le_eta2", "chain_eta1_le_gamma1R",
                 "tube_disc1", "tube_disc2", "cone_horizontal", "cone_vertical"):
        assert rep.row(name).status == "certified", name


def test_certify_chain_boundary_inconclusive_not_violated():
    a = 0.1
    rep = certify_chain(Params(-18.75 * (1 + a) ** 2, a))
    assert rep.status in ("certified", "inconclusive")
    assert not any(r.status == "violated" for r in rep.rows)


def test_certify_margins_monotone_in_c():
    margins = []
    for c in (-25, -30, -40):
        rep = certify_chain(Params(c, 0.1))
        margins.append(rep.row("hov_beta").margin.lo)
    assert margins[0] < margins[1] < margins[2]


def test_certify_phase_invariance(pstar):
    rep0 = certify_chain(pstar)
    rep1 = certify_chain(Params(25 * np.exp(1.234j), 0.1 * np.exp(-2.1j)))
    for r0, r1 in zip(rep0.rows, rep1.rows):
        assert r0.status == r1.status
        assert abs(r0.margin.lo - r1.margin.lo) < 1e-9 * max(1, abs(r0.margin.lo))


def test_sweep_matches_single_cell(pstar):
    rows = sweep([(pstar.c, pstar.a)])
    single = certify_chain(pstar)
    assert len(rows) == 1
    assert rows[0].status == single.status
    assert rows[0].window == single.window


def test_sweep_straddles_boundary():
    rows = sweep([(-20.0, 0.1), (-25.0, 0.1)])
    assert rows[0].status == "empty-window"
    assert rows[1].status == "certified"


def test_sweep_threads_deterministic(pstar):
    cells = [(-25.0 - k, 0.1) for k in range(6)]
    seq = sweep(cells, threads=1)
    par = sweep(cells, threads=4)
    assert [r.status for r in seq] == [r.status for r in par]
    assert [r.window for r in seq] == [r.window for r in par]
