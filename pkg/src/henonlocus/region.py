"""Region certification: membership in the working horseshoe region, the
admissible radius window, derived box constants, and interval-certified
inequality chains.

The working region is |c| > beta (1+|a|)^2 with default beta = 18.75, the
minimum of 2(g1^2+g2^2)/(g1^2-g2^2)^2 over the admissible cone parameters,
attained at g1 = 4/5, g2 = 2*sqrt(2)/5.  Setting gamma2 = 0 recovers the
beta = 9/2 variant without inner tubes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .dynamics import Params
from .errors import EmptyWindow, TubeRadiusFailure
from .intervals import Interval, iabs

# Defaults are the optimal cone parameters; gamma2 = 2*sqrt(2)/5 is declared
# by its exact rational square so the coupling constraints (which hold with
# equality at the optimum) stay decidable.
GAMMA1_DEFAULT = 0.8
GAMMA2_DEFAULT = 2.0 * math.sqrt(2.0) / 5.0
GAMMA1_SQ_EXACT = Fraction(16, 25)
GAMMA2_SQ_EXACT = Fraction(8, 25)
BETA_DEFAULT = 18.75


def beta_from_gammas(gamma1, gamma2) -> float:
    """Works on floats or Fractions; exact when given exact squares via **2."""
    g1, g2 = gamma1 * gamma1, gamma2 * gamma2
    return 2.0 * (g1 + g2) / (g1 - g2) ** 2


def beta_exact(g1_sq=GAMMA1_SQ_EXACT, g2_sq=GAMMA2_SQ_EXACT) -> Fraction:
    return 2 * (g1_sq + g2_sq) / (g1_sq - g2_sq) ** 2


def _default_gammas(gamma1: float, gamma2: float) -> bool:
    return gamma1 == GAMMA1_DEFAULT and abs(gamma2 - GAMMA2_DEFAULT) < 1e-15


@dataclass(frozen=True)
class RegionConstants:
    """All derived box constants for one certified parameter pair."""

    beta: float
    gamma1: float
    gamma2: float
    R: float
    delta: float
    eta1: float
    eta2: float
    R3: float
    R4: float
    window: tuple = field(default=(0.0, 0.0))

    def __post_init__(self):
        slack = 1e-9 * max(1.0, self.R)
        chain = (0.0 < self.gamma2 * self.R <= self.eta2 + slack
                 < self.eta1 + slack <= self.gamma1 * self.R + 2 * slack
                 < self.R + 3 * slack)
        if not chain:
            raise ValueError("technical chain gamma2*R <= eta2 < eta1 <= gamma1*R < R violated")


def hov_beta_membership(p: Params, beta: float = BETA_DEFAULT):
    """(member, margin) for |c| > beta (1 + |a|)^2; margin = |c| - beta(1+|a|)^2."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    margin = abs(p.c) - beta * (1.0 + abs(p.a)) ** 2
    return margin > 0.0, margin


def r1_lower_bound(p: Params) -> float:
    """R1 from the filtration condition, largest root of R^2-(1+|a|)R-|c|."""
    s = 1.0 + abs(p.a)
    return 0.5 * (s + math.sqrt(s * s + 4.0 * abs(p.c)))


def radius_window(p: Params, gamma1: float = GAMMA1_DEFAULT,
                  gamma2: float = GAMMA2_DEFAULT) -> Interval:
    """Admissible interval for the filtration radius R.

    Lower end makes eta1 <= gamma1*R, upper end makes eta2 >= gamma2*R;
    both intersected with the plain filtration bounds R1 < R < |c|/(1+|a|).
    """
    if not (0.0 < gamma2 < gamma1 < 1.0):
        raise ValueError("need 0 < gamma2 < gamma1 < 1")
    s = 1.0 + abs(p.a)
    c0 = 4.0 * abs(p.c) / (s * s)
    g1, g2 = gamma1 * gamma1, gamma2 * gamma2
    rmin = 0.5 * s * (1.0 + math.sqrt(1.0 + c0 * g1)) / g1
    rmax = 0.5 * s * (-1.0 + math.sqrt(1.0 + c0 * g2)) / g2
    lo = max(rmin, r1_lower_bound(p))
    hi = min(rmax, abs(p.c) / s)
    if lo > hi:
        raise EmptyWindow(
            f"radius window empty for c={p.c}, a={p.a} "
            f"(lo={lo:.6g} > hi={hi:.6g}); parameters outside the region")
    return Interval(lo, hi)


def _tube_radius(quad_lo: float, quad_hi: float, lo_cap: float, hi_cap: float,
                 what: str) -> float:
    lo, hi = max(quad_lo, lo_cap), min(quad_hi, hi_cap)
    if lo > hi:
        raise TubeRadiusFailure(f"no admissible {what} in [{lo:.6g}, {hi:.6g}]")
    return 0.5 * (lo + hi)


def region_constants(p: Params, gamma1: float = GAMMA1_DEFAULT,
                     gamma2: float = GAMMA2_DEFAULT,
                     beta: float = BETA_DEFAULT) -> RegionConstants:
    """Derived constants with R at the window midpoint, R3/R4 at the midpoints
    of their admissible quadratic-root brackets."""
    win = radius_window(p, gamma1, gamma2)
    R = win.mid
    aa, cc = abs(p.a), abs(p.c)
    delta = 0.5 * (aa + 1.0)
    eta1 = math.sqrt(cc + R * (1.0 + aa))
    eta2 = math.sqrt(cc - R * (1.0 + aa))

    d1 = (2.0 * gamma2 * R - 1.0) ** 2 - 8.0 * R * aa
    d2 = (2.0 * gamma2 * R - aa) ** 2 - 8.0 * R
    if d1 < 0.0 or d2 < 0.0:
        raise TubeRadiusFailure(f"negative tube discriminant (d1={d1:.6g}, d2={d2:.6g})")
    s1, s2 = math.sqrt(d1), math.sqrt(d2)
    R3 = _tube_radius((2.0 * gamma2 * R + 1.0 - s1) / 4.0,
                      (2.0 * gamma2 * R + 1.0 + s1) / 4.0,
                      1.0 + aa, gamma2 * R, "R3")
    R4 = _tube_radius((2.0 * gamma2 * R + aa - s2) / 4.0,
                      (2.0 * gamma2 * R + aa + s2) / 4.0,
                      1.0 + aa, gamma2 * R, "R4")
    return RegionConstants(beta=beta, gamma1=gamma1, gamma2=gamma2, R=R,
                           delta=delta, eta1=eta1, eta2=eta2, R3=R3, R4=R4,
                           window=(win.lo, win.hi))


# -- interval-certified inequality chain --------------------------------------

@dataclass(frozen=True)
class CertRow:
    name: str
    status: str           # certified | violated | inconclusive
    margin: Interval
    strict: bool = True


@dataclass(frozen=True)
class CertificationReport:
    c: complex
    a: complex
    status: str           # certified | violated | inconclusive | empty-window
    window: tuple
    rows: tuple

    def row(self, name: str) -> CertRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def all_certified(self) -> bool:
        return self.status == "certified"


def _row(name: str, margin: Interval, strict: bool = True) -> CertRow:
    if (margin.strictly_positive() if strict else margin.nonnegative()):
        status = "certified"
    elif margin.strictly_negative():
        status = "violated"
    else:
        status = "inconclusive"
    return CertRow(name, status, margin, strict)


def _gamma_rows(gamma1: float, gamma2: float):
    """Coupling constraints gamma1 <= (1+sqrt(1+3 g2^2))/3 and gamma1 <= sqrt(2) gamma2.

    At the default optimum both hold with equality, which outward rounding can
    never certify; the defaults carry exact rational squares, so decide there
    by exact arithmetic (both reduce to rational comparisons).
    """
    if _default_gammas(gamma1, gamma2):
        g1s, g2s = GAMMA1_SQ_EXACT, GAMMA2_SQ_EXACT
        # gamma1 <= sqrt(2) gamma2  <=>  g1s <= 2 g2s
        tubes_ok = g1s <= 2 * g2s
        # gamma1 <= (1 + sqrt(1+3 g2s))/3  <=>  (3 gamma1 - 1)^2 <= 1 + 3 g2s
        lhs = (3 * Fraction(4, 5) - 1) ** 2
        dynv_ok = lhs <= 1 + 3 * g2s
        zero = Interval.exact(0.0)
        return [CertRow("gamma_dynv", "certified" if dynv_ok else "violated", zero, False),
                CertRow("gamma_tubes", "certified" if tubes_ok else "violated", zero, False)]
    g1 = Interval.around(gamma1)
    g2 = Interval.around(gamma2)
    one = Interval.exact(1.0)
    return [_row("gamma_dynv", (one + (one + 3 * g2.sq()).sqrt()) / 3 - g1, strict=False),
            _row("gamma_tubes", g2 * Interval.exact(2.0).sqrt() - g1, strict=False)]


def certify_chain(p: Params, gamma1: float = GAMMA1_DEFAULT,
                  gamma2: float = GAMMA2_DEFAULT,
                  beta: float = BETA_DEFAULT) -> CertificationReport:
    """Evaluate every inequality the constructions depend on, in outward
    interval arithmetic over the concrete constants chosen by region_constants.
    """
    try:
        rc = region_constants(p, gamma1, gamma2, beta)
    except (EmptyWindow, TubeRadiusFailure):
        return CertificationReport(p.c, p.a, "empty-window", (), ())

    ia = iabs(p.a)
    ic = iabs(p.c)
    one = Interval.exact(1.0)
    g1 = Interval.around(gamma1) if gamma1 != 0.8 else Interval.exact(0.8)
    g2 = Interval.around(gamma2)
    R = Interval.around(rc.R)
    R3 = Interval.around(rc.R3)
    R4 = Interval.around(rc.R4)
    s = one + ia
    delta = s / 2
    eta1 = (ic + R * s).sqrt()
    eta2 = (ic - R * s).sqrt()
    g1R, g2R = g1 * R, g2 * R
    half = Interval.exact(0.5)
    r1 = (s + (s.sq() + 4 * ic).sqrt()) * half

    rows = [
        _row("hov_beta", ic - Interval.around(beta) * s.sq()),
        _row("radius_lower", R - r1),
        _row("radius_upper", ic / s - R),
        _row("chain_gamma2R_le_eta2", eta2 - g2R, strict=False),
        _row("chain_eta2_lt_eta1", eta1 - eta2),
        _row("chain_eta1_le_gamma1R", g1R - eta1, strict=False),
        _row("chain_gamma1R_lt_R", R - g1R),
        # image of the inner vertical box clears the filtration radius
        _row("bdelta", ic - delta.sq() - ia * R - R),
        # projection hypotheses used to build the dynamical box boundaries
        _row("proj_dynv_x_inner", (one - g1) * R * half - R * ia / (2 * g1R - one)),
        _row("proj_dynv_x_outer", (one - g1) * R * half - R * ia / ((one + g1) * R - one)),
        _row("proj_dynv_y_inner", (one - g1) * R * half - R / (2 * g1R - ia)),
        _row("proj_dynv_y_outer", (one - g1) * R * half - R / ((one + g1) * R - ia)),
        # inner-tube discriminants and radius brackets
        _row("tube_disc1", (2 * g2R - one).sq() - 8 * R * ia, strict=False),
        _row("tube_disc2", (2 * g2R - ia).sq() - 8 * R, strict=False),
        _row("proj_tube_R3", g2R - R3 - R * ia / (2 * R3 - one)),
        _row("proj_tube_R4", g2R - R4 - R / (2 * R4 - ia)),
        _row("tube_R3_low", R3 - s, strict=False),
        _row("tube_R4_low", R4 - s, strict=False),
        _row("tube_R3_high", g2R - R3),
        _row("tube_R4_high", g2R - R4),
        # cone expansion factors exceed 1
        _row("cone_horizontal", 2 * g1R - ia - one),
        _row("cone_vertical", (2 * g1R - one) / ia - one),
    ]
    rows += _gamma_rows(gamma1, gamma2)
    statuses = {r.status for r in rows}
    if statuses == {"certified"}:
        status = "certified"
    elif "violated" in statuses:
        status = "violated"
    else:
        status = "inconclusive"
    return CertificationReport(p.c, p.a, status, rc.window, tuple(rows))


def sweep(cells, gamma1: float = GAMMA1_DEFAULT, gamma2: float = GAMMA2_DEFAULT,
          beta: float = BETA_DEFAULT, threads: int = 1):
    """Certify a finite iterable of (c, a) cells; deterministic row-major order.

    Cells are independent; with threads > 1 they are evaluated in a pool and
    reduced by task index, so the output never depends on the thread count.
    """
    cells = list(cells)
    if threads > 1 and len(cells) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(
                lambda ca: certify_chain(Params(ca[0], ca[1]), gamma1, gamma2, beta),
                cells))
    return [certify_chain(Params(c, a), gamma1, gamma2, beta) for c, a in cells]
