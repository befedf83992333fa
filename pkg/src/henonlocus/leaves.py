"""Leaves of the escaping-set foliations, traced as graphs, and the membership
geometry of the dynamical box and its inner tubes.

A plus-leaf in the vertical-like zone is a graph x = phi(y); tracing moves the
graph parameter along a path and corrects each predictor step by driving the
line integral of the gradient pair over the step segment to zero, which keeps
the (local branch of the) complex leaf value constant without ever choosing a
branch.  Minus-leaves are symmetric graphs y = psi(x).

Membership in the dynamical box uses a fast modulus gate away from the
boundary families (leaf drift is bounded by slope-bound * extent) and falls
back to tracing the phase-matched boundary leaf to the query slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Params, Point, backward_xy, forward_xy
from .errors import (ExitFaceViolation, NewtonDivergence, SlopeBoundViolation,
                     SlowConvergence, TipNotFound)
from .escape import OK, minus_jets, plus_jets

# Gauss-Legendre 5 on [0, 1]
_G5_T = np.array([0.046910077030668, 0.230765344947158, 0.5,
                  0.769234655052841, 0.953089922969332])
_G5_W = np.array([0.118463442528095, 0.239314335249683, 0.284444444444444,
                  0.239314335249683, 0.118463442528095])


def _grad(p, X, Y, sign, tol, max_depth):
    b = (plus_jets if sign == "plus" else minus_jets)(p, X, Y, tol, max_depth, order=1)
    if not (b.status == OK).all():
        raise SlowConvergence(f"gradient evaluation failed on {int((b.status != OK).sum())} "
                              f"trace points ({sign} side)")
    return b.lx, b.ly


def _segment_drift(p, x0, y0, x1, y1, sign, tol, max_depth):
    """Gauss-5 line integral of (Lx dx + Ly dy) over straight segments."""
    dx, dy = x1 - x0, y1 - y0
    xs = (x0[None, :] + _G5_T[:, None] * dx[None, :]).ravel()
    ys = (y0[None, :] + _G5_T[:, None] * dy[None, :]).ravel()
    lx, ly = _grad(p, xs, ys, sign, tol, max_depth)
    lx = lx.reshape(5, -1)
    ly = ly.reshape(5, -1)
    return (_G5_W[:, None] * (lx * dx[None, :] + ly * dy[None, :])).sum(axis=0)


@dataclass
class LeafCurve:
    sign: str                    # plus | minus
    orientation: str             # x-over-y (plus) | y-over-x (minus)
    params: np.ndarray           # graph parameter samples along the trace
    points: np.ndarray           # shape (n, 2) complex
    slopes: np.ndarray           # leaf slope at each sample
    drift: np.ndarray            # corrector residual at each accepted sample
    slope_bound: float = math.inf

    @property
    def xs(self):
        return self.points[:, 0]

    @property
    def ys(self):
        return self.points[:, 1]

    def point(self, i) -> Point:
        return Point(self.points[i, 0], self.points[i, 1])


def _advance(p, x0, y0, h, sign, par_y, tol, max_depth, slope_cap, depth=0):
    """One predictor-corrector step of size h (per lane); halves recursively
    on corrector failure.  Returns (x, y, slope, |drift|)."""
    lx, ly = _grad(p, x0, y0, sign, tol, max_depth)
    slope = -ly / lx if par_y else -lx / ly
    if slope_cap is not None and (np.abs(slope) > slope_cap).any():
        raise SlopeBoundViolation(
            f"leaf slope {np.abs(slope).max():.3g} exceeded bound {slope_cap:.3g}")
    if par_y:
        x1, y1 = x0 + slope * h, y0 + h
    else:
        x1, y1 = x0 + h, y0 + slope * h
    d = _segment_drift(p, x0, y0, x1, y1, sign, tol, max_depth)
    converged = False
    for _ in range(12):
        bad = np.abs(d) > tol
        if not bad.any():
            converged = True
            break
        lx1, ly1 = _grad(p, x1[bad], y1[bad], sign, tol, max_depth)
        corr = -d[bad] / (lx1 if par_y else ly1)
        if par_y:
            d[bad] += _segment_drift(p, x1[bad], y1[bad], x1[bad] + corr, y1[bad],
                                     sign, tol, max_depth)
            x1[bad] = x1[bad] + corr
        else:
            d[bad] += _segment_drift(p, x1[bad], y1[bad], x1[bad], y1[bad] + corr,
                                     sign, tol, max_depth)
            y1[bad] = y1[bad] + corr
    if not converged:
        if depth >= 6:
            raise NewtonDivergence("leaf corrector did not settle; step too small to halve")
        xh, yh, _, _ = _advance(p, x0, y0, 0.5 * h, sign, par_y, tol, max_depth,
                                slope_cap, depth + 1)
        return _advance(p, xh, yh, 0.5 * h, sign, par_y, tol, max_depth,
                        slope_cap, depth + 1)
    return x1, y1, slope, np.abs(d)


def _march(p, xs, ys, targets, sign, tol, max_step, max_depth=200,
           slope_cap=None, param=None):
    """March a batch of leaf lanes from their current graph parameter to
    `targets`, in lockstep substeps of length <= max_step per lane.

    `param` fixes the graph orientation: 'y' traces x(y) (natural for plus
    leaves), 'x' traces y(x) (natural for minus); default by sign.
    """
    xs = np.array(xs, dtype=complex)
    ys = np.array(ys, dtype=complex)
    targets = np.asarray(targets, dtype=complex)
    par_y = (param or ("y" if sign == "plus" else "x")) == "y"
    par = ys if par_y else xs
    span = targets - par
    nstep = np.maximum(1, np.ceil(np.abs(span) / max_step).astype(int))
    h = np.where(nstep > 0, span / nstep, 0.0)
    total = int(nstep.max())
    drift = np.zeros(xs.shape[0])
    slopes = np.zeros(xs.shape[0], dtype=complex)

    for k in range(total):
        live = k < nstep
        if not live.any():
            break
        x1, y1, slope, dd = _advance(p, xs[live], ys[live], h[live], sign,
                                     par_y, tol, max_depth, slope_cap)
        xs[live], ys[live] = x1, y1
        drift[live] = dd
        slopes[live] = slope
    return xs, ys, slopes, drift


def trace_leaf(p: Params, rc, seed: Point, sign: str, param_grid,
               tol: float = 1e-11, max_step: float = None,
               slope_cap: float = 1.0) -> LeafCurve:
    """Trace the leaf through `seed` visiting the graph-parameter values of
    `param_grid` in order (plus: y-values, minus: x-values)."""
    if max_step is None:
        max_step = 0.1 * rc.delta
    grid = np.asarray(list(param_grid), dtype=complex)
    x, y = np.array([seed.x], complex), np.array([seed.y], complex)
    pts, slopes, drifts = [], [], []
    for t in grid:
        x, y, s, d = _march(p, x, y, np.array([t]), sign, tol, max_step,
                            slope_cap=slope_cap)
        pts.append((x[0], y[0])); slopes.append(s[0]); drifts.append(d[0])
    return LeafCurve(sign, "x-over-y" if sign == "plus" else "y-over-x",
                     grid, np.array(pts), np.array(slopes), np.array(drifts),
                     slope_bound=float(np.max(np.abs(slopes))) if slopes else math.inf)


def march_family(p, rc, seeds_x, seeds_y, targets, sign, tol=1e-11,
                 max_step=None, slope_cap=1.0):
    """Batch variant: distinct seeds, one target parameter per lane."""
    if max_step is None:
        max_step = 0.1 * rc.delta
    return _march(p, seeds_x, seeds_y, targets, sign, tol, max_step,
                  slope_cap=slope_cap)


# -- parabolic pull-back -------------------------------------------------------

@dataclass
class ParabolicLeaf:
    curve: LeafCurve              # the pulled-back curve (graph over x)
    tip: complex                  # x-coordinate z0 with 2 z0 = phi'(z0)
    tip_point: Point              # the tangency-capable point on the curve


def parabolic_pullback(p: Params, rc, leaf: LeafCurve, tol: float = 1e-11,
                       n_seeds: int = 8) -> ParabolicLeaf:
    """Pull a vertical-like plus-leaf back one step; the image is parabolic:
    its projection to y is 2:1 except at the unique tip 2 z0 = phi'(z0),
    located by damped Newton from `n_seeds` starts on |z| = delta/2."""
    if leaf.sign != "plus":
        raise ValueError("parabolic_pullback expects a plus-leaf")
    back = np.array([backward_xy(p, x, y) for x, y in leaf.points])
    curve = LeafCurve("plus", "y-over-x", leaf.points[:, 1].copy(), back,
                      np.zeros(len(back), complex), np.zeros(len(back)))

    # phi'(z) is the slope of the input leaf at parameter z; reach parameter z
    # by re-marching from the nearest stored sample.
    def phi_slope(z):
        i = int(np.argmin(np.abs(leaf.params - z)))
        x, y, s, _ = _march(p, [leaf.points[i, 0]], [leaf.points[i, 1]],
                            np.array([z]), "plus", tol, 0.1 * rc.delta)
        lx, ly = _grad(p, x, y, "plus", tol, 200)
        return complex(-ly[0] / lx[0]), complex(x[0])

    tips = []
    for k in range(n_seeds):
        z = 0.5 * rc.delta * np.exp(2j * np.pi * k / n_seeds)
        for _ in range(60):
            s, _ = phi_slope(z)
            znew = 0.5 * s
            if abs(znew - z) < 1e-12:
                z = znew
                break
            z = znew
        tips.append(z)
    tips = np.array(tips)
    if np.abs(tips - tips[0]).max() > 1e-9:
        raise TipNotFound(f"tip seeds disagree: spread {np.abs(tips - tips[0]).max():.3g}")
    z0 = complex(tips[0])
    if abs(z0) >= rc.delta:
        raise TipNotFound(f"tip |z0| = {abs(z0):.6g} not inside delta = {rc.delta:.6g}")
    _, phi_z0 = phi_slope(z0)
    tip_pt = Point(z0, (z0 * z0 + p.c - phi_z0) / p.a)
    return ParabolicLeaf(curve, z0, tip_pt)


# -- membership geometry -------------------------------------------------------

@dataclass
class BoxGeometry:
    """Membership tests for the dynamical box, its inner tubes, and the
    fundamental domain, built on the four boundary leaf families."""

    p: Params
    rc: object
    tol: float = 1e-10
    coarse_step: float = 0.35
    pad: float = 1e-7
    _cache: dict = field(default_factory=dict, repr=False)

    # (seed radius, slope bound) for each boundary family
    def _family(self, kind):
        rc = self.rc
        aa = abs(self.p.a)
        if kind == "vt_v":     # vertical boundary of the box
            return 0.5 * (1.0 + rc.gamma1) * rc.R, aa / (2.0 * rc.gamma1 * rc.R - 1.0)
        if kind == "vt_h":     # horizontal boundary of the box
            return 0.5 * (1.0 + rc.gamma1) * rc.R, 1.0 / (2.0 * rc.gamma1 * rc.R - aa)
        if kind == "bv":       # vertical boundary of the inner vertical tube
            return rc.gamma2 * rc.R, aa / (2.0 * rc.R3 - 1.0)
        if kind == "bh":       # horizontal boundary of the inner horizontal tube
            return rc.gamma2 * rc.R, 1.0 / (2.0 * rc.R4 - aa)
        raise KeyError(kind)

    def _boundary_modulus(self, kind, coord, other):
        """|boundary leaf coordinate| at the slice `other`, phase-matched to
        `coord`; traced on demand and cached on a quantized key."""
        rho, sbound = self._family(kind)
        vertical = kind in ("vt_v", "bv")
        theta = np.angle(coord)
        key = (kind, round(theta, 6), round(other.real, 6), round(other.imag, 6))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        sign = "plus" if vertical else "minus"
        for _ in range(4):
            seed = rho * np.exp(1j * theta)
            if vertical:
                xs, ys, _, _ = _march(self.p, [seed], [0j], np.array([other]),
                                      sign, self.tol, self.coarse_step)
                b = complex(xs[0])
            else:
                xs, ys, _, _ = _march(self.p, [0j], [seed], np.array([other]),
                                      sign, self.tol, self.coarse_step)
                b = complex(ys[0])
            mis = np.angle(coord) - np.angle(b)
            mis = (mis + np.pi) % (2 * np.pi) - np.pi
            if abs(mis) < 1e-10:
                break
            theta += mis
        self._cache[key] = abs(b)
        return abs(b)

    def _gate(self, kind, coord, other):
        """True if `coord` is inside the boundary family `kind` at slice `other`."""
        rho, sbound = self._family(kind)
        extent = min(abs(other), self.rc.R)
        drift = sbound * extent + self.pad
        m = abs(coord)
        if m <= rho - drift:
            return True
        if m >= rho + drift:
            return False
        return m < self._boundary_modulus(kind, coord, other)

    def in_vtilde(self, z) -> bool:
        x, y = complex(z.x), complex(z.y)
        rc = self.rc
        if max(abs(x), abs(y)) <= rc.gamma1 * rc.R:     # inside the core polydisk
            return True
        if max(abs(x), abs(y)) > rc.R:                  # outside the filtration box
            return False
        return self._gate("vt_v", x, y) and self._gate("vt_h", y, x)

    def in_bv(self, z) -> bool:
        return self.in_vtilde(z) and self._gate("bv", complex(z.x), complex(z.y))

    def in_bh(self, z) -> bool:
        return self.in_vtilde(z) and self._gate("bh", complex(z.y), complex(z.x))

    def in_image_of_box(self, z) -> bool:
        """z in H(box) <=> H^{-1}(z) in box."""
        xb, yb = backward_xy(self.p, complex(z.x), complex(z.y))
        if max(abs(xb), abs(yb)) > 4.0 * self.rc.R:
            return False
        return self.in_vtilde(Point(xb, yb))

    def in_F(self, z) -> bool:
        """Fundamental domain F = (box union {|y| <= delta}) minus H(box)."""
        x, y = complex(z.x), complex(z.y)
        if not np.isfinite(x) or not np.isfinite(y):
            return False
        in_strip = abs(y) <= self.rc.delta
        if not in_strip and max(abs(x), abs(y)) > self.rc.R:
            return False
        if not (in_strip or self.in_vtilde(z)):
            return False
        return not self.in_image_of_box(z)


# -- boundary families and their face checks ------------------------------------

@dataclass
class BoundaryFamilyReport:
    kind: str
    seeds: np.ndarray
    min_modulus: float
    max_modulus: float
    curves_checked: int


def construct_vtilde_boundary(p: Params, rc, n_seeds: int = 64, n_radii: int = 6,
                              n_rays: int = 8, tol: float = 1e-10):
    """Trace the four boundary families of the dynamical box and verify the
    exit-face claims: vertical-boundary leaves keep gamma1 R < |x| < R over the
    whole height, horizontal ones keep gamma1 R < |y| < R over the width."""
    rho = 0.5 * (1.0 + rc.gamma1) * rc.R
    reports = []
    for kind, sign in (("vertical", "plus"), ("horizontal", "minus")):
        thetas = 2 * np.pi * np.arange(n_seeds) / n_seeds
        seeds = rho * np.exp(1j * thetas)
        lo, hi = np.inf, 0.0
        for ray in range(n_rays):
            ang = 2 * np.pi * ray / n_rays
            for r in np.linspace(rc.R / n_radii, rc.R, n_radii):
                target = r * np.exp(1j * ang)
                if kind == "vertical":
                    xs, ys, _, _ = _march(p, seeds.copy(), np.zeros(n_seeds, complex),
                                          np.full(n_seeds, target), "plus", tol, 0.3)
                    mod = np.abs(xs)
                else:
                    xs, ys, _, _ = _march(p, np.zeros(n_seeds, complex), seeds.copy(),
                                          np.full(n_seeds, target), "minus", tol, 0.3)
                    mod = np.abs(ys)
                lo, hi = min(lo, mod.min()), max(hi, mod.max())
        if not (rc.gamma1 * rc.R < lo and hi < rc.R):
            raise ExitFaceViolation(
                f"{kind} box boundary left its shell: moduli in [{lo:.6g}, {hi:.6g}], "
                f"expected within ({rc.gamma1 * rc.R:.6g}, {rc.R:.6g})")
        reports.append(BoundaryFamilyReport(kind, seeds, lo, hi, n_seeds))
    return reports


def construct_tube_boundary(p: Params, rc, which: str = "v", n_seeds: int = 64,
                            n_radii: int = 5, n_rays: int = 8, tol: float = 1e-10,
                            geometry: BoxGeometry = None):
    """Trace the inner-tube boundary family and verify: it keeps clear of the
    inner radius (R3 resp. R4), stays inside gamma1 R, and its one-step image
    leaves the dynamical box."""
    rho = rc.gamma2 * rc.R
    inner = rc.R3 if which == "v" else rc.R4
    thetas = 2 * np.pi * np.arange(n_seeds) / n_seeds
    seeds = rho * np.exp(1j * thetas)
    geometry = geometry or BoxGeometry(p, rc)
    lo, hi = np.inf, 0.0
    image_inside = 0
    for ray in range(n_rays):
        ang = 2 * np.pi * ray / n_rays
        for r in np.linspace(rc.R / n_radii, 0.98 * rc.gamma1 * rc.R, n_radii):
            target = r * np.exp(1j * ang)
            if which == "v":
                xs, ys, _, _ = _march(p, seeds.copy(), np.zeros(n_seeds, complex),
                                      np.full(n_seeds, target), "plus", tol, 0.3)
                mod = np.abs(xs)
                img = [Point(*forward_xy(p, x, y)) for x, y in zip(xs, ys)]
            else:
                xs, ys, _, _ = _march(p, np.zeros(n_seeds, complex), seeds.copy(),
                                      np.full(n_seeds, target), "minus", tol, 0.3)
                mod = np.abs(ys)
                img = [Point(*backward_xy(p, x, y)) for x, y in zip(xs, ys)]
            lo, hi = min(lo, mod.min()), max(hi, mod.max())
            image_inside += sum(geometry.in_vtilde(q) for q in img)
    if lo <= inner:
        raise ExitFaceViolation(f"tube boundary crossed the inner radius: "
                                f"min modulus {lo:.6g} <= {inner:.6g}")
    if hi > rc.gamma1 * rc.R:
        raise ExitFaceViolation(f"tube boundary left |coord| <= gamma1 R: {hi:.6g}")
    if image_inside:
        raise ExitFaceViolation(
            f"{image_inside} one-step images of the tube boundary landed inside the box")
    return BoundaryFamilyReport(f"tube-{which}", seeds, lo, hi, n_seeds)
