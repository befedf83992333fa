"""Critical-locus location, tracing, certification and topology checks.

The locus is the zero set of the tangency function w built from the two
logarithmic Bottcher gradients.  On a line {y = y0} inside the vertical strip
it is located by Newton in x with the exact gradient of w; traced components
carry per-point diagnostics: normalized residual, gradient norm, angles to
both foliations, and the order-of-contact margin 2 - |a psi'' + phi''| built
from Richardson divided differences of traced leaf slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Params, Point, backward_xy, forward_xy
from .errors import (BoundaryCircleCountMismatch, ContinuationBreak,
                     DisconnectedSheets, MultipleFound, NewtonDivergence,
                     NoneFound, OutsideStrip, PhaseJump, RepolishFailure,
                     ZeroOnContour)
from .escape import OK, w_batch
from .leaves import BoxGeometry, _march
from .coding import SymbolCode, h_label, vertical_tube_center_x

ACCEPT_TOL = 1e-10          # normalized |w| at accepted points
GRAD_TOL = 1e-13            # dyadic refinement tolerance for w evaluations
SMOOTH_TOL = 1e-6           # lower bound on the w gradient norm
TRANSVERSALITY_TOL = 1e-2   # radians


@dataclass(frozen=True)
class LocusPoint:
    point: Point
    w_residual: float          # |w| / (||dL+|| ||dL-||)
    grad_w_norm: float         # max(|wx|, |wy|)
    angle_plus: float          # angle to the plus foliation tangent, radians
    angle_minus: float
    contact_margin: float      # 2 - |a psi'' + phi''|
    zero_distance: float = 0.0  # |w| / ||grad w||: estimated distance to the zero set

    def passes(self, accept_tol=ACCEPT_TOL, smooth_tol=SMOOTH_TOL,
               trans_tol=TRANSVERSALITY_TOL) -> bool:
        return (self.w_residual < accept_tol and self.grad_w_norm > smooth_tol
                and self.angle_plus > trans_tol and self.angle_minus > trans_tol
                and self.contact_margin > 0.0)

    def passes_geometric(self, dist_tol=1e-10, smooth_tol=SMOOTH_TOL,
                         trans_tol=TRANSVERSALITY_TOL) -> bool:
        """Pass criterion for deep-tube points, where the normalized residual
        hits its floating-point floor: distance to the zero set instead."""
        return (self.zero_distance < dist_tol and self.grad_w_norm > smooth_tol
                and self.angle_plus > trans_tol and self.angle_minus > trans_tol
                and self.contact_margin > 0.0)


@dataclass
class LocusCloud:
    label: str
    points: list
    gaps: list = field(default_factory=list)
    words: list = field(default_factory=list)   # per-point tube words, if labeled

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class CloudReport:
    label: str
    n_points: int
    max_residual: float
    min_grad: float
    min_angle_plus: float
    min_angle_minus: float
    min_contact_margin: float
    passed: bool


def _angle(u1, u2, v1, v2):
    """Angle between complex lines spanned by (u1,u2) and (v1,v2)."""
    num = np.abs(u1 * np.conj(v1) + u2 * np.conj(v2))
    den = np.sqrt((np.abs(u1) ** 2 + np.abs(u2) ** 2)
                  * (np.abs(v1) ** 2 + np.abs(v2) ** 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.arccos(np.clip(num / den, 0.0, 1.0))


def _leaf_slopes_at_offsets(p, rc, X, Y, offsets, sign, param, tol):
    """Graph slopes of the `sign` leaf through each (X_i, Y_i), re-corrected at
    graph parameter + offset; param 'x' gives dy/dx, 'y' gives dx/dy."""
    out = []
    base = X if param == "x" else Y
    for off in offsets:
        xs, ys, _, _ = _march(p, X, Y, base + off, sign, tol, 0.1 * rc.delta,
                              param=param)
        b = w_batch(p, xs, ys, tol, order=1)
        jb = b.plus if sign == "plus" else b.minus
        out.append(-jb.lx / jb.ly if param == "x" else -jb.ly / jb.lx)
    return np.array(out)


def _contact_margin(p, rc, X, Y, tangent_x, tangent_y, tol, h_frac):
    """|2 - a psi'' - phi''| per point, via Richardson divided differences of
    leaf slopes in the graph orientation adapted to the common tangent.

    Where the tangent is horizontal-like both leaves are y(x) graphs and the
    strip identity gives |2 - a psi'' - phi''| = |a| |d2(plus) - d2(minus)|;
    where it is vertical-like both are x(y) graphs and the mirrored identity
    drops the factor |a|.
    """
    h = h_frac * rc.delta
    offs = np.array([-2 * h, -h, h, 2 * h])

    def second(s):
        d1 = (s[2] - s[1]) / (2 * h)
        d2 = (s[3] - s[0]) / (4 * h)
        return (4.0 * d1 - d2) / 3.0

    margin = np.empty(X.shape[0])
    horiz = np.abs(tangent_x) >= np.abs(tangent_y)
    for param, mask in (("x", horiz), ("y", ~horiz)):
        if not mask.any():
            continue
        sp = _leaf_slopes_at_offsets(p, rc, X[mask], Y[mask], offs, "plus", param, tol)
        sm = _leaf_slopes_at_offsets(p, rc, X[mask], Y[mask], offs, "minus", param, tol)
        diff = np.abs(second(sp) - second(sm))
        margin[mask] = abs(p.a) * diff if param == "x" else diff
    return margin


def diagnostics_batch(p: Params, rc, X, Y, tol: float = GRAD_TOL,
                      h_frac: float = 1e-4):
    """Full per-point diagnostics for batches of candidate locus points."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    b = w_batch(p, X, Y, tol, order=2)
    npn, nmn = b.norms()
    resid = np.abs(b.w) / (npn * nmn)
    gradn = np.maximum(np.abs(b.wx), np.abs(b.wy))
    ang_p = _angle(-b.wy, b.wx, -b.plus.ly, b.plus.lx)
    ang_m = _angle(-b.wy, b.wx, -b.minus.ly, b.minus.lx)
    margin = _contact_margin(p, rc, X, Y, -b.plus.ly, b.plus.lx, tol, h_frac)
    zdist = np.abs(b.w) / gradn
    return b, resid, gradn, ang_p, ang_m, margin, zdist


def _locus_points(p, rc, X, Y, tol=GRAD_TOL):
    _, resid, gradn, ang_p, ang_m, margin, zdist = diagnostics_batch(p, rc, X, Y, tol)
    return [LocusPoint(Point(x, y), float(r), float(g), float(a1), float(a2), float(m), float(zd))
            for x, y, r, g, a1, a2, m, zd in
            zip(X, Y, resid, gradn, ang_p, ang_m, margin, zdist)]


# -- Newton solves on lines -----------------------------------------------------

def _newton_on_line(p, value, seeds, axis: str, tol=ACCEPT_TOL, max_iter=40,
                    grad_tol=GRAD_TOL):
    """Batched Newton for w(x, value)=0 in x (axis='x') or w(value, y)=0 in y.

    Returns (roots, converged mask)."""
    t = np.asarray(seeds, dtype=complex).copy()
    done = np.zeros(t.shape, dtype=bool)
    for _ in range(max_iter):
        X = t if axis == "x" else np.full_like(t, value)
        Y = np.full_like(t, value) if axis == "x" else t
        b = w_batch(p, X, Y, grad_tol, order=2)
        npn, nmn = b.norms()
        resid = np.abs(b.w) / (npn * nmn)
        d = b.wx if axis == "x" else b.wy
        ok = b.ok & np.isfinite(resid)
        step = np.where(ok & ~done, b.w / d, 0.0)
        step = np.where(np.isfinite(step), step, 0.0)
        # resid floor: accept once the Newton step is below machine scale
        done |= ok & ((resid < tol) | (np.abs(step) < 1e-14 * (1.0 + np.abs(t))))
        if done.all():
            break
        t = t - np.where(done, 0.0, step)
    return t, done


def solve_tangency_on_line(p: Params, rc, y0, seed_x=0.0 + 0j,
                           tol: float = ACCEPT_TOL, want_diagnostics=True):
    """Newton in x on w(x, y0) = 0; root must stay in the vertical strip."""
    roots, conv = _newton_on_line(p, complex(y0), [seed_x], "x", tol)
    if not conv[0]:
        # one retry fan around the strip center
        fan = 0.25 * rc.delta * np.array([0, 1, -1, 1j, -1j, 0.5 + 0.5j])
        roots, conv = _newton_on_line(p, complex(y0), fan, "x", tol)
        if not conv.any():
            raise NewtonDivergence(f"tangency Newton failed at y0 = {y0}")
        roots = roots[conv][:1]
    x = complex(roots[0])
    if abs(x) >= rc.delta:
        raise OutsideStrip(f"root |x| = {abs(x):.6g} outside delta = {rc.delta:.6g}")
    if not want_diagnostics:
        return Point(x, complex(y0))
    return _locus_points(p, rc, np.array([x]), np.array([complex(y0)]))[0]


def solve_tangency_on_hline(p: Params, rc, x0, seed_y=0.0 + 0j,
                            tol: float = ACCEPT_TOL, want_diagnostics=True):
    roots, conv = _newton_on_line(p, complex(x0), [seed_y], "y", tol)
    if not conv[0]:
        fan = 0.25 * rc.delta * np.array([0, 1, -1, 1j, -1j, 0.5 - 0.5j])
        roots, conv = _newton_on_line(p, complex(x0), fan, "y", tol)
        if not conv.any():
            raise NewtonDivergence(f"tangency Newton failed at x0 = {x0}")
        roots = roots[conv][:1]
    y = complex(roots[0])
    if abs(y) >= rc.delta:
        raise OutsideStrip(f"root |y| = {abs(y):.6g} outside delta = {rc.delta:.6g}")
    if not want_diagnostics:
        return Point(complex(x0), y)
    return _locus_points(p, rc, np.array([complex(x0)]), np.array([y]))[0]


# -- argument-principle zero counting ---------------------------------------------

def winding_count(values) -> float:
    """Total argument increment / 2 pi over a closed sample sequence."""
    ph = np.angle(np.asarray(values))
    d = np.diff(np.concatenate([ph, ph[:1]]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return float(d.sum() / (2 * np.pi))


def zero_count_on_disk(p: Params, rc, value, radius, axis: str = "x",
                       n_init: int = 64, max_rounds: int = 12,
                       accept_tol: float = ACCEPT_TOL,
                       grad_tol: float = GRAD_TOL) -> int:
    """Argument-principle count of zeros of w restricted to the line, inside
    the circle of `radius` around 0 in the moving coordinate.

    Adaptive phase tracking: segments with phase jump >= pi/2 are bisected.
    """
    thetas = list(np.linspace(0.0, 2 * np.pi, n_init, endpoint=False))

    def eval_w(ths):
        zz = radius * np.exp(1j * np.asarray(ths))
        X = zz if axis == "x" else np.full(len(ths), complex(value))
        Y = np.full(len(ths), complex(value)) if axis == "x" else zz
        b = w_batch(p, X, Y, grad_tol, order=1)
        if not b.ok.all():
            raise PhaseJump("contour point failed to escape; move the contour")
        return b.w, b.w_normalized

    vals, wn = eval_w(thetas)
    if wn.min() < 10 * accept_tol:
        raise ZeroOnContour(f"normalized |w| = {wn.min():.3g} on the contour")
    vals = list(vals)
    for _ in range(max_rounds):
        ph = np.angle(np.array(vals))
        d = np.diff(np.concatenate([ph, ph[:1]]))
        d = (d + np.pi) % (2 * np.pi) - np.pi
        bad = np.where(np.abs(d) >= 0.5 * np.pi)[0]
        if len(bad) == 0:
            w = winding_count(np.array(vals))
            n = round(w)
            if abs(w - n) > 0.05:
                raise PhaseJump(f"non-integer winding {w:.4g}")
            return int(n)
        newt = []
        for i in bad:
            t0 = thetas[i]
            t1 = thetas[(i + 1) % len(thetas)]
            if i == len(thetas) - 1:
                t1 += 2 * np.pi
            newt.append(0.5 * (t0 + t1))
        nv, nwn = eval_w(newt)
        if nwn.min() < 10 * accept_tol:
            raise ZeroOnContour(f"normalized |w| = {nwn.min():.3g} on refined contour")
        merged = []
        mergedv = []
        ni = 0
        for i, (t, v) in enumerate(zip(thetas, vals)):
            merged.append(t); mergedv.append(v)
            if ni < len(bad) and bad[ni] == i:
                merged.append(newt[ni] % (2 * np.pi) if newt[ni] < 2 * np.pi else newt[ni])
                mergedv.append(nv[ni])
                ni += 1
        thetas, vals = merged, mergedv
    raise PhaseJump("refinement exhausted")


# -- component traces --------------------------------------------------------------

def annulus_grid(rc, n_radii: int = 26, n_phases: int = 26,
                 r_lo: float = None, r_hi: float = None,
                 avoid_cones=((0.0, 0.3), (math.pi, 0.3))):
    """Sampling grid for the tube annulus, avoiding the phase cones where the
    removed sets and the Julia slices accumulate."""
    r_lo = r_lo if r_lo is not None else rc.gamma2 * rc.R * 1.04
    r_hi = r_hi if r_hi is not None else rc.gamma1 * rc.R * 0.97
    out = []
    for r in np.linspace(r_lo, r_hi, n_radii):
        for ph in np.linspace(0.0, 2 * np.pi, n_phases, endpoint=False):
            if any(min(abs(ph - c), 2 * np.pi - abs(ph - c)) < w
                   or min(abs(ph - c - np.pi) % (2 * np.pi),
                          2 * np.pi - (abs(ph - c - np.pi) % (2 * np.pi))) < w
                   for c, w in avoid_cones):
                continue
            out.append(r * np.exp(1j * ph))
    return np.array(out)


def _trace_strip(p, rc, values, axis, label, tol=ACCEPT_TOL):
    """Continuation of the strip tangency along grid `values` (y-values for the
    vertical component, x-values for the horizontal one)."""
    roots, kept, gaps = [], [], []
    seed = 0.0 + 0j
    for v in values:
        try:
            pt = (solve_tangency_on_line if axis == "x" else solve_tangency_on_hline)(
                p, rc, v, seed, tol, want_diagnostics=False)
            root = pt.x if axis == "x" else pt.y
            seed = root
            roots.append(root)
            kept.append(v)
        except Exception as e:  # noqa: BLE001 - gap kinds logged, trace continues
            gaps.append((complex(v), type(e).__name__))
            seed = 0.0 + 0j
    if not roots:
        raise ContinuationBreak(f"no {label} points found")
    roots = np.array(roots)
    kept = np.array(kept)
    X = roots if axis == "x" else kept
    Y = kept if axis == "x" else roots
    pts = _locus_points(p, rc, X, Y)
    return LocusCloud(label, pts, gaps)


def trace_cv(p: Params, rc, y_values=None, tol: float = ACCEPT_TOL) -> LocusCloud:
    if y_values is None:
        y_values = annulus_grid(rc)
    return _trace_strip(p, rc, y_values, "x", "Cv", tol)


def trace_ch(p: Params, rc, x_values=None, tol: float = ACCEPT_TOL) -> LocusCloud:
    if x_values is None:
        x_values = annulus_grid(rc)
    return _trace_strip(p, rc, x_values, "y", "Ch", tol)


def smoothness_transversality_report(cloud: LocusCloud,
                                     accept_tol=ACCEPT_TOL, smooth_tol=SMOOTH_TOL,
                                     trans_tol=TRANSVERSALITY_TOL) -> CloudReport:
    if not cloud.points:
        raise ValueError("empty cloud")
    res = max(q.w_residual for q in cloud.points)
    gr = min(q.grad_w_norm for q in cloud.points)
    a1 = min(q.angle_plus for q in cloud.points)
    a2 = min(q.angle_minus for q in cloud.points)
    cm = min(q.contact_margin for q in cloud.points)
    ok = (res < accept_tol and gr > smooth_tol and a1 > trans_tol
          and a2 > trans_tol and cm > 0.0)
    return CloudReport(cloud.label, len(cloud.points), res, gr, a1, a2, cm, ok)


# -- mapping clouds through the dynamics --------------------------------------------

def repolish(p: Params, rc, X, Y, tol=ACCEPT_TOL, max_iter=3, grad_tol=GRAD_TOL):
    """Newton re-polish of near-locus points along the steepest w direction."""
    X = np.array(X, dtype=complex)
    Y = np.array(Y, dtype=complex)
    def state():
        b = w_batch(p, X, Y, grad_tol, order=2)
        npn, nmn = b.norms()
        resid = np.abs(b.w) / (npn * nmn)
        d1, d2 = np.conj(b.wx), np.conj(b.wy)
        t = -b.w / (b.wx * d1 + b.wy * d2)
        good = (resid < tol) | (np.abs(t) * np.maximum(np.abs(d1), np.abs(d2))
                                < 1e-14 * (1.0 + np.abs(X) + np.abs(Y)))
        return resid, t, d1, d2, good

    for _ in range(max_iter):
        resid, t, d1, d2, good = state()
        if good.all():
            return X, Y, resid
        X = np.where(good, X, X + t * d1)
        Y = np.where(good, Y, Y + t * d2)
    resid, _, _, _, good = state()
    if not good.all():
        raise RepolishFailure(f"{int((~good).sum())} points failed to re-polish")
    return X, Y, resid


def iterate_component(p: Params, rc, cloud: LocusCloud, n: int,
                      geometry: BoxGeometry = None, tol=ACCEPT_TOL) -> LocusCloud:
    """Map a cloud by H^{+-n} pointwise and re-polish onto the locus; points
    are relabeled by the tube word of depth |n| when their iterates stay in
    the box (word None otherwise)."""
    if abs(n) > 8:
        raise ValueError("|n| > 8")
    X = np.array([q.point.x for q in cloud.points], dtype=complex)
    Y = np.array([q.point.y for q in cloud.points], dtype=complex)
    for _ in range(abs(n)):
        X, Y = (forward_xy if n > 0 else backward_xy)(p, X, Y)
    X, Y, _ = repolish(p, rc, X, Y, tol)
    pts = _locus_points(p, rc, X, Y)
    geometry = geometry or BoxGeometry(p, rc)
    words = []
    for x, y in zip(X, Y):
        zz, lab, ok_word = Point(x, y), [], True
        cx, cy = x, y
        for _ in range(abs(n)):
            cx, cy = forward_xy(p, cx, cy)
            u = Point(cx, cy)
            if max(abs(cx), abs(cy)) > rc.R or not geometry.in_vtilde(u):
                ok_word = False
                break
            lab.append(h_label(p, u))
        words.append(tuple(lab) if ok_word else None)
    base = "Cv" if n <= 0 else "Ch"
    return LocusCloud(f"{cloud.label}_iter{n:+d}", pts, list(cloud.gaps), words)


# -- handles ------------------------------------------------------------------------

def _uv_batch(p, X, Y, k, m):
    """u = h1_k, v = h2_{-m} with full first derivatives, vectorized."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    one = np.ones_like(X)
    zero = np.zeros_like(X)
    vx, vy = X.copy(), Y.copy()
    gx = (one.copy(), zero.copy())
    gy = (zero.copy(), one.copy())
    for _ in range(k):
        nvx = vx * vx + p.c - p.a * vy
        ngx = (2 * vx * gx[0] - p.a * gy[0], 2 * vx * gx[1] - p.a * gy[1])
        vy, gy = vx, gx
        vx, gx = nvx, ngx
    u, ux, uy = vx, gx[0], gx[1]
    vx, vy = X.copy(), Y.copy()
    gx = (one.copy(), zero.copy())
    gy = (zero.copy(), one.copy())
    for _ in range(m):
        nvy = (vy * vy + p.c - vx) / p.a
        ngy = ((2 * vy * gy[0] - gx[0]) / p.a, (2 * vy * gy[1] - gx[1]) / p.a)
        vx, gx = vy, gy
        vy, gy = nvy, ngy
    v, vx_, vy_ = vy, gy[0], gy[1]
    return u, ux, uy, v, vx_, vy_


def _ring_newton(p, rc, X, Y, targets, k, m, coord: str, tol=ACCEPT_TOL,
                 grad_tol=GRAD_TOL, max_iter=30):
    """Solve {w = 0, coordfun = target} per lane; coordfun is u (coord='u')
    or v (coord='v').  Returns (X, Y, ok)."""
    X = np.array(X, dtype=complex)
    Y = np.array(Y, dtype=complex)
    done = np.zeros(X.shape, dtype=bool)
    for _ in range(max_iter):
        b = w_batch(p, X, Y, grad_tol, order=2)
        u, ux, uy, v, vx_, vy_ = _uv_batch(p, X, Y, k, m)
        cval, cx, cy = (u, ux, uy) if coord == "u" else (v, vx_, vy_)
        npn, nmn = b.norms()
        resid = np.abs(b.w) / (npn * nmn)
        r2 = cval - targets
        # the coordinate functions amplify roundoff by their gradient size,
        # so the constraint tolerance must track the evaluation noise
        r2tol = np.maximum(1e-11 * np.maximum(1.0, np.abs(targets)),
                           100.0 * np.finfo(float).eps * (np.abs(cx) + np.abs(cy))
                           * (1.0 + np.abs(X) + np.abs(Y)))
        det = b.wx * cy - b.wy * cx
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = (cy * b.w - b.wy * r2) / det
            dy = (-cx * b.w + b.wx * r2) / det
        dx = np.where(np.isfinite(dx), dx, 0.0)
        dy = np.where(np.isfinite(dy), dy, 0.0)
        stall = (np.abs(dx) + np.abs(dy)) < 1e-14 * (1.0 + np.abs(X) + np.abs(Y))
        done = b.ok & (np.abs(r2) < r2tol) & ((resid < tol) | stall)
        if done.all():
            return X, Y, done
        X = X - np.where(done, 0.0, dx)
        Y = Y - np.where(done, 0.0, dy)
    return X, Y, done


@dataclass
class Handle:
    code: SymbolCode
    rings_u: list          # list of (X, Y) rings marched from the u boundary
    rings_v: list
    connected: bool
    boundary_circles: int
    points: LocusCloud

    @property
    def all_xy(self):
        xs = [r[0] for r in self.rings_u + self.rings_v]
        ys = [r[1] for r in self.rings_u + self.rings_v]
        return np.concatenate(xs), np.concatenate(ys)


def _uv_newton(p, code, u_t, v_t, seed, tol=1e-11, max_iter=60):
    """2x2 Newton for {h1_k = u_t, h2_{-m} = v_t} from `seed` (scalars)."""
    k, m = len(code.backward), len(code.forward)
    x, y = complex(seed[0]), complex(seed[1])
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        u, ux, uy, v, vx_, vy_ = _uv_batch(p, [x], [y], k, m)
        r1, r2 = u[0] - u_t, v[0] - v_t
        noise = 100.0 * eps * (abs(ux[0]) + abs(uy[0]) + abs(vx_[0]) + abs(vy_[0])) \
            * (1.0 + abs(x) + abs(y))
        if max(abs(r1), abs(r2)) < max(tol * max(1.0, abs(u_t), abs(v_t)), noise):
            return x, y
        det = ux[0] * vy_[0] - uy[0] * vx_[0]
        x -= (vy_[0] * r1 - uy[0] * r2) / det
        y -= (-vx_[0] * r1 + ux[0] * r2) / det
    raise NewtonDivergence("u-v path step did not converge")


def _slide_to_locus(p, rc, code, k, m, coord, spine, target, tol):
    """Newton toward the locus along the fiber {coordfun = target} through
    `spine`.  The fiber direction is only first-order tangent, so each slide
    step is followed by a restoring step that re-imposes the constraint
    (deep-level coordinates curve fast)."""
    x, y = complex(spine[0]), complex(spine[1])
    for _ in range(40):
        b = w_batch(p, np.array([x]), np.array([y]), GRAD_TOL, order=2)
        u, ux, uy, v, vx_, vy_ = _uv_batch(p, [x], [y], k, m)
        cx, cy = (ux[0], uy[0]) if coord == "u" else (vx_[0], vy_[0])
        fib = (-cy, cx)
        den = b.wx[0] * fib[0] + b.wy[0] * fib[1]
        t = -b.w[0] / den
        npn, nmn = b.norms()
        if (abs(b.w[0]) / (npn[0] * nmn[0]) < tol
                or abs(t) * max(abs(fib[0]), abs(fib[1]))
                < 1e-14 * (1 + abs(x) + abs(y))):
            break
        x, y = x + t * fib[0], y + t * fib[1]
        for _ in range(8):   # restore the constraint exactly
            u, ux, uy, v, vx_, vy_ = _uv_batch(p, [x], [y], k, m)
            cval = u[0] if coord == "u" else v[0]
            cx, cy = (ux[0], uy[0]) if coord == "u" else (vx_[0], vy_[0])
            r2 = cval - target
            noise = (100.0 * np.finfo(float).eps * (abs(cx) + abs(cy))
                     * (1.0 + abs(x) + abs(y)))
            if abs(r2) < max(1e-12 * max(1.0, abs(target)), noise):
                break
            s = -r2 / (abs(cx) ** 2 + abs(cy) ** 2)
            x, y = x + s * np.conj(cx), y + s * np.conj(cy)
    return x, y


def _kappa_pin(p, X, Y, kap_t, pole_u, pole_v, k, m, tol, max_iter=30):
    """Solve {w = 0, (u - pole_u)(v - pole_v) = kap_t} per lane."""
    X = np.array(X, dtype=complex)
    Y = np.array(Y, dtype=complex)
    done = np.zeros(X.shape, dtype=bool)
    for _ in range(max_iter):
        b = w_batch(p, X, Y, GRAD_TOL, order=2)
        u, ux, uy, v, vx_, vy_ = _uv_batch(p, X, Y, k, m)
        ut, vt = u - pole_u, v - pole_v
        r2 = ut * vt - kap_t
        kx = vt * ux + ut * vx_
        ky = vt * uy + ut * vy_
        npn, nmn = b.norms()
        resid = np.abs(b.w) / (npn * nmn)
        det = b.wx * ky - b.wy * kx
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = (ky * b.w - b.wy * r2) / det
            dy = (-kx * b.w + b.wx * r2) / det
        dx = np.where(np.isfinite(dx), dx, 0.0)
        dy = np.where(np.isfinite(dy), dy, 0.0)
        stall = (np.abs(dx) + np.abs(dy)) < 1e-14 * (1.0 + np.abs(X) + np.abs(Y))
        done = b.ok & (np.abs(r2 / kap_t) < 0.2) & ((resid < tol) | stall)
        if done.all():
            return X, Y, done
        X = X - np.where(done, 0.0, dx)
        Y = Y - np.where(done, 0.0, dy)
    return X, Y, done


def _seed_boundary_ring(p, rc, code, k, m, radius, coord, resolution, tol):
    """First locus ring on {|coordfun| = radius} for a pure-forward code
    (k = 0, u = x): put the spine point on the tube-center surface at the
    boundary level, slide to the locus along the complementary fiber, then
    sweep the circle."""
    from .coding import horizontal_tube_center_y
    assert k == 0
    thetas = 2 * np.pi * np.arange(resolution) / resolution
    X = np.empty(resolution, dtype=complex)
    Y = np.empty(resolution, dtype=complex)
    if coord == "u":
        yc = horizontal_tube_center_y(p, code.forward, radius) if m else 0.0
        spine = (radius, yc)
    else:
        # the v fibers hug the thin tube direction: Newton in y from the
        # center surface converges in one or two steps
        y0 = horizontal_tube_center_y(p, code.forward, 0.0) if m else radius + 0j
        x0 = 0.0 + 0j
        if m:
            for _ in range(40):
                _, _, _, v, _, vy_ = _uv_batch(p, [x0], [y0], k, m)
                step = (v[0] - radius) / vy_[0]
                y0 -= step
                if abs(step) < 1e-15 * (1 + abs(y0)):
                    break
        spine = (x0, y0)
    prev = _slide_to_locus(p, rc, code, k, m, coord, spine, radius, tol)
    # the wanted sheet extends the strip component, whose complementary
    # straightening coordinate stays inside the tangency strip
    sheet_cap = 1.5 * rc.delta

    def on_sheet(x, y):
        u, _, _, v, _, _ = _uv_batch(p, [x], [y], k, m)
        comp = v[0] if coord == "u" else u[0]
        return abs(comp) <= sheet_cap

    if not on_sheet(*prev):
        raise BoundaryCircleCountMismatch(
            f"boundary ring ({coord}) seed slid off its sheet")

    def solve_arc(th_from, th_to, seed, depth=0):
        # deep tubes have Newton basins of the order of the tube width; halve
        # the angular step until the neighbor seed lands inside the basin
        tx, ty, ok = _ring_newton(p, rc, [seed[0]], [seed[1]],
                                  np.array([radius * np.exp(1j * th_to)]), k, m,
                                  coord, tol)
        if ok[0] and on_sheet(tx[0], ty[0]):
            return tx[0], ty[0]
        if depth >= 12:
            raise BoundaryCircleCountMismatch(
                f"boundary ring ({coord}) failed at angle {th_to:.3f}")
        mid = 0.5 * (th_from + th_to)
        at_mid = solve_arc(th_from, mid, seed, depth + 1)
        return solve_arc(mid, th_to, at_mid, depth + 1)

    prev = solve_arc(0.0, 0.0, prev)
    th_prev = 0.0
    for i, th in enumerate(thetas):
        prev = solve_arc(th_prev, th, prev)
        th_prev = th
        X[i], Y[i] = prev
    return X, Y


def trace_handle(p: Params, rc, code: SymbolCode, resolution: int = 64,
                 tol: float = ACCEPT_TOL, shrink: float = 0.78,
                 boundary_frac: float = 0.92, max_rings: int = 400,
                 with_diagnostics: bool = True) -> Handle:
    """Trace the locus component inside the region addressed by `code` by
    marching locus rings inward from both boundary circles until the two
    continuation fronts meet.

    In the straightening coordinates u = h1_k, v = h2_{-m} the component is
    hyperbola-like; the u front marches down in |u| from the vertical boundary
    and the v front symmetrically.  Failure of the fronts to pair up within
    the ring step signals the two-disk configuration and raises loudly.

    A code with a backward word is traced through its forward image: the
    region maps by H^k onto the pure-forward region of the concatenated word
    and the straightening coordinates correspond exactly, so the rings pull
    back point by point (with a Newton re-polish against roundoff growth).
    """
    k, m = len(code.backward), len(code.forward)
    if k + m > 4:
        raise ValueError("|lam| + |om| > 4")
    if k > 0:
        fwd_word = tuple(reversed(code.backward)) + tuple(code.forward)
        inner = trace_handle(p, rc, SymbolCode((), fwd_word), resolution, tol,
                             shrink, boundary_frac, max_rings,
                             with_diagnostics=False)

        def pull(ring):
            X, Y = np.array(ring[0]), np.array(ring[1])
            for _ in range(k):
                X, Y = backward_xy(p, X, Y)
                X, Y, _ = repolish(p, rc, X, Y, tol)
            return X, Y

        rings_u = [pull(r) for r in inner.rings_u]
        rings_v = [pull(r) for r in inner.rings_v]
        Xall = np.concatenate([r[0] for r in rings_u + rings_v])
        Yall = np.concatenate([r[1] for r in rings_u + rings_v])
        if with_diagnostics:
            pts = _locus_points(p, rc, Xall, Yall)
        else:
            pts = [LocusPoint(Point(x, y), 0.0, np.inf, np.inf, np.inf, np.inf)
                   for x, y in zip(Xall, Yall)]
        cloud = LocusCloud(f"Handle({code})", pts)
        return Handle(code, rings_u, rings_v, inner.connected,
                      inner.boundary_circles, cloud)
    r0 = boundary_frac * rc.gamma2 * rc.R
    thetas = 2 * np.pi * np.arange(resolution) / resolution

    Xu, Yu = _seed_boundary_ring(p, rc, code, k, m, r0, "u", resolution, tol)
    Xv, Yv = _seed_boundary_ring(p, rc, code, k, m, r0, "v", resolution, tol)
    circles = 2
    rings_u = [(Xu.copy(), Yu.copy())]
    rings_v = [(Xv.copy(), Yv.copy())]

    # The two sheets meeting at the waist sit at small offsets u0(v), v0(u)
    # off the straightening axes; in the shifted gauges the component is
    # hyperbola-like and the axis coordinate log(v~/u~) is monotone along it
    # from the E^v circle to the E^h circle.  Flow every lane of the E^v ring
    # along the locus in that gauge: connectivity is then witnessed by
    # explicit connecting paths landing on the E^h circle.
    u_eh, _, _, v_eh, _, _ = _uv_batch(p, Xv, Yv, k, m)
    u_ev, _, _, v_ev, _, _ = _uv_batch(p, Xu, Yu, k, m)
    pole_u = complex(u_eh.mean())   # steep-sheet u offset (seen on the E^h ring)
    pole_v = complex(v_ev.mean())   # flat-sheet v offset (seen on the E^v ring)

    X, Y = Xu.copy(), Yu.copy()
    arrived = np.zeros(resolution, dtype=bool)
    h_lane = np.full(resolution, 0.12)
    u0, _, _, v0, _, _ = _uv_batch(p, X, Y, k, m)
    kappa = (u0 - pole_u) * (v0 - pole_v)   # slowly-varying along the component
    for step in range(max_rings):
        live = ~arrived
        if not live.any():
            break
        b = w_batch(p, X[live], Y[live], GRAD_TOL, order=2)
        u, ux, uy, v, vx_, vy_ = _uv_batch(p, X[live], Y[live], k, m)
        if not b.ok.all():
            raise DisconnectedSheets("flow lane left the computable region")
        tx, ty = -b.wy, b.wx
        tn = np.maximum(np.abs(tx), np.abs(ty))
        tx, ty = tx / tn, ty / tn
        ut, vt = u - pole_u, v - pole_v
        # piecewise monotone gauge: descend log|u~| on the flat side, ascend
        # log|v~| past the waist (the blended gauge loses its sign where the
        # pole error dominates the small coordinate)
        g_u = -(ux * tx + uy * ty) / ut
        g_v = (vx_ * tx + vy_ * ty) / vt
        G = np.where(np.abs(ut) > np.abs(vt), g_u, g_v)
        # damp the step near the arrival circle so lanes land on it
        room = np.maximum(0.05, np.log(np.maximum(r0 / np.abs(v), 1e-12)))
        h_eff = np.minimum(h_lane[live], room)
        with np.errstate(divide="ignore", invalid="ignore"):
            dz = h_eff / G
        cap = 0.08 * (1.0 + np.abs(X[live]) + np.abs(Y[live]))
        dz = np.where(np.isfinite(dz), dz, cap)
        big = np.abs(dz) > cap
        dz = np.where(big, dz * cap / np.abs(dz), dz)
        X1, Y1 = X[live] + dz * tx, Y[live] + dz * ty
        # corrector: pin back onto the locus along the steepest w direction
        okc = np.zeros(X1.shape, dtype=bool)
        for _ in range(6):
            bc = w_batch(p, X1, Y1, GRAD_TOL, order=2)
            npn, nmn = bc.norms()
            resid = np.abs(bc.w) / (npn * nmn)
            d1, d2 = np.conj(bc.wx), np.conj(bc.wy)
            t = -bc.w / (bc.wx * d1 + bc.wy * d2)
            stall = (np.abs(t) * np.maximum(np.abs(d1), np.abs(d2))
                     < 1e-14 * (1 + np.abs(X1) + np.abs(Y1)))
            okc = bc.ok & ((resid < tol) | stall)
            if okc.all():
                break
            X1 = np.where(okc, X1, X1 + t * d1)
            Y1 = np.where(okc, Y1, Y1 + t * d2)
        u1, _, _, v1, _, _ = _uv_batch(p, X1, Y1, k, m)
        kap1 = (u1 - pole_u) * (v1 - pole_v)
        okc &= (np.abs(u1 - pole_u) <= 1.3 * r0) & (np.abs(v1 - pole_v) <= 1.3 * r0)
        # a jump of the hyperbola invariant means the corrector hopped onto a
        # nearby sheet (deep sheets can be exponentially close in space);
        # re-correct the hopped lanes with the invariant pinned, which is
        # transversal to the component and separates the sheets by orders of
        # magnitude
        idx = np.where(live)[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            hop = np.abs(np.log(np.abs(kap1 / kappa[idx])))
        hopped = ~(np.isfinite(hop) & (hop < 1.5))
        if (hopped & okc).any():
            sel = hopped & okc
            Xp = X[idx[sel]] + dz[sel] * tx[sel]
            Yp = Y[idx[sel]] + dz[sel] * ty[sel]
            Xr, Yr, okr = _kappa_pin(p, Xp, Yp, kappa[idx[sel]], pole_u, pole_v,
                                     k, m, tol)
            X1[sel], Y1[sel] = Xr, Yr
            ur, _, _, vr, _, _ = _uv_batch(p, Xr, Yr, k, m)
            kap1[sel] = (ur - pole_u) * (vr - pole_v)
            with np.errstate(divide="ignore", invalid="ignore"):
                hop2 = np.abs(np.log(np.abs(kap1[sel] / kappa[idx[sel]])))
            okc[sel] = okr & np.isfinite(hop2) & (hop2 < 1.5)
        else:
            okc &= ~hopped
        X[idx[okc]], Y[idx[okc]] = X1[okc], Y1[okc]
        kappa[idx[okc]] = kap1[okc]
        h_lane[idx[okc]] = np.minimum(h_lane[idx[okc]] * 1.2, 0.3)
        h_lane[idx[~okc]] *= 0.5
        if (h_lane < 1e-4).any():
            raise DisconnectedSheets(
                "flow corrector kept failing; the sheets do not join smoothly")
        _, _, _, vnew, _, _ = _uv_batch(p, X[idx[okc]], Y[idx[okc]], k, m)
        arrived[idx[okc][np.abs(vnew) >= 0.98 * r0]] = True
        if step % 4 == 3:
            rings_u.append((X.copy(), Y.copy()))
    if not arrived.all():
        raise DisconnectedSheets(
            f"{int((~arrived).sum())} flow lanes never reached the horizontal "
            f"boundary within {max_rings} steps")
    # snap arrivals exactly onto the E^h circle {|v| = r0} and verify they
    # land among its seeded points; staged to stay within Newton basins
    for stage in (0.5, 1.0):
        _, _, _, va, _, _ = _uv_batch(p, X, Y, k, m)
        targets = (r0 / np.abs(va)) ** stage * va
        X, Y, oks = _ring_newton(p, rc, X, Y, targets, k, m, "v", tol)
        if not oks.all():
            raise DisconnectedSheets("arrival snap onto the opposite circle failed")
    rings_u.append((X.copy(), Y.copy()))
    d = np.abs(X[:, None] - Xv[None, :]) + np.abs(Y[:, None] - Yv[None, :])
    near = d.min(axis=1)
    spacing = np.median(np.abs(np.diff(Xv)) + np.abs(np.diff(Yv))) + 1e-15
    if near.max() >= 4.0 * spacing:
        raise DisconnectedSheets(
            f"flow lanes arrived {near.max():.3g} from the opposite boundary "
            f"circle (spacing {spacing:.3g})")
    connected = True

    Xall = np.concatenate([r[0] for r in rings_u + rings_v])
    Yall = np.concatenate([r[1] for r in rings_u + rings_v])
    if with_diagnostics:
        pts = _locus_points(p, rc, Xall, Yall)
    else:
        pts = [LocusPoint(Point(x, y), 0.0, np.inf, np.inf, np.inf, np.inf)
               for x, y in zip(Xall, Yall)]
    cloud = LocusCloud(f"Handle({code})", pts)
    return Handle(code, rings_u, rings_v, connected, circles, cloud)


# -- fundamental domain --------------------------------------------------------------

def fundamental_domain_locate(p: Params, rc, z: Point, search_range: int = 15,
                              geometry: BoxGeometry = None) -> int:
    """The unique n in [-search_range, search_range] with H^n(z) in
    F = (box union horizontal strip) minus H(box)."""
    if search_range > 30:
        raise ValueError("search range too large")
    geometry = geometry or BoxGeometry(p, rc)
    hits = []
    x, y = complex(z.x), complex(z.y)
    pts = {0: (x, y)}
    cx, cy = x, y
    for n in range(1, search_range + 1):
        cx, cy = forward_xy(p, cx, cy)
        pts[n] = (cx, cy)
        if max(abs(cx), abs(cy)) > 1e100:
            break
    cx, cy = x, y
    for n in range(1, search_range + 1):
        cx, cy = backward_xy(p, cx, cy)
        pts[-n] = (cx, cy)
        if max(abs(cx), abs(cy)) > 1e100:
            break
    for n in sorted(pts):
        px, py = pts[n]
        if max(abs(px), abs(py)) > 2.0 * rc.R and abs(py) > rc.delta:
            continue
        if geometry.in_F(Point(px, py)):
            hits.append(n)
    if not hits:
        raise NoneFound(f"no fundamental-domain visit in [-{search_range}, {search_range}]")
    if len(hits) > 1:
        raise MultipleFound(f"fundamental-domain visits at n = {hits}")
    return hits[0]


# -- boundary accumulation -------------------------------------------------------------

def boundary_accumulation_probe(p: Params, rc, symbol: int, depths,
                                y_samples=None, leaf_depth: int = 14,
                                tol: float = ACCEPT_TOL):
    """Distances from the locus piece in the nested vertical tubes of the
    constant-`symbol` ray to the limiting stable slice, per depth.

    Returns (distances indexed by depth 0..max, ratios between consecutive
    depths >= 1, cone_bound)."""
    symbol = int(symbol)
    depths = sorted(depths)
    if max(depths) > 8:
        raise ValueError("depth > 8")
    if y_samples is None:
        y_samples = np.array([1.4, -1.7, 1.1j, 2.3, -2.6, 1.9 - 0.8j])
    leaf_word = (symbol,) * leaf_depth
    xj = np.array([vertical_tube_center_x(p, leaf_word, y) for y in y_samples])

    dists = {}
    # depth 0: the strip component against the stable slice
    x0 = []
    for y in y_samples:
        pt = solve_tangency_on_line(p, rc, y, 0.0, tol, want_diagnostics=False)
        x0.append(pt.x)
    dists[0] = float(np.mean(np.abs(np.array(x0) - xj)))
    for n in depths:
        roots = []
        for y in y_samples:
            seed = vertical_tube_center_x(p, (symbol,) * n, y)
            r, conv = _newton_on_line(p, complex(y), [seed], "x", tol)
            if not conv[0]:
                raise NewtonDivergence(f"locus-in-tube solve failed at depth {n}")
            roots.append(r[0])
        dists[n] = float(np.mean(np.abs(np.array(roots) - xj)))
    seq = [dists[n] for n in depths]
    ratios = [b / a for a, b in zip(seq, seq[1:])]
    cone_bound = 1.0 / (2.0 * rc.gamma2 * rc.R - abs(p.a))
    return dists, ratios, cone_bound
