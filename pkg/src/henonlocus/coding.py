"""Horseshoe symbolic dynamics: tube labeling, itineraries, periodic orbits
from codes, nested-component counting, Delta-regions with straightening maps,
and the conjugacy check.

Conventions.  The two components of H(box) cap box are labeled by proximity to
the representative centers y = +-sqrt(x - c); label 0 goes to the center with
smaller real part (ties by imaginary part).  For a point z the orbit label
sequence is s_j = label(H^j(z)).  A backward word lam (addressing backward
images of the vertical tube) is read off forward iterates, lam[-k] = s_k, and
a forward word omega (addressing forward images of the horizontal tube) off
backward iterates, omega_j = s_{-j}; that is the unique assignment with
B^v_lam inside T^v_lam and B^h_omega inside T^h_omega.  `SymbolCode.backward`
stores lam depth-ordered (backward[k] = s_{k+1}) and `forward` stores omega
(forward[j] = s_{-j}).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .dynamics import Params, Point, backward_xy, forward_xy
from .errors import (AmbiguousMembership, ComponentCountMismatch,
                     NewtonDivergence, OrbitLeftBox, ResolutionTooCoarse,
                     StraighteningDegenerate, WrongItinerary)
from .leaves import BoxGeometry


@dataclass(frozen=True)
class SymbolCode:
    backward: tuple      # lam, depth-ordered: backward[k] = label(H^{k+1} z)
    forward: tuple       # omega: forward[j] = label(H^{-j} z)

    def __str__(self):
        lam = "".join(str(int(b)) for b in reversed(self.backward))
        om = "".join(str(int(b)) for b in self.forward)
        return f"lam={lam or 'e'}|om={om or 'e'}"

    @staticmethod
    def parse(s: str) -> "SymbolCode":
        lam_s, om_s = s.replace("λ", "lam").replace("ω", "om").split("|")
        lam_s = lam_s.split("=")[1].strip()
        om_s = om_s.split("=")[1].strip()
        lam = tuple(int(ch) for ch in reversed(lam_s)) if lam_s not in ("", "e") else ()
        om = tuple(int(ch) for ch in om_s) if om_s not in ("", "e") else ()
        return SymbolCode(lam, om)


def component_representatives(p: Params, x):
    """Centers of the two components of H(box) cap box over first coordinate x,
    ordered so index 0 has the smaller real part (ties by imaginary part)."""
    r = np.sqrt(np.asarray(x, dtype=complex) - p.c)
    swap = (r.real < 0) | ((r.real == 0) & (r.imag < 0))
    r = np.where(swap, -r, r)
    return -r, r


def h_label(p: Params, z) -> int:
    """Label of the component of H(box) cap box nearest to z (no membership check)."""
    rep0, rep1 = component_representatives(p, complex(z.x))
    return int(abs(complex(z.y) - rep1) < abs(complex(z.y) - rep0))


def h_label_xy(p: Params, X, Y):
    rep0, rep1 = component_representatives(p, X)
    return (np.abs(Y - rep1) < np.abs(Y - rep0)).astype(np.int8)


@dataclass(frozen=True)
class TubeLabeling:
    rep0: complex
    rep1: complex
    centers: tuple
    y_band: tuple


def label_tubes(p: Params, rc, slice_x: float = 0.1, resolution: int = 200) -> TubeLabeling:
    """Locate the two components of H(box) cap box on the slice {x = slice_x}
    by flood fill, check count and band, and fix the 0/1 assignment."""
    lim = rc.eta1 + 0.5
    g = np.linspace(-lim, lim, resolution)
    Yg = g[None, :] + 1j * g[:, None]
    _, yb = backward_xy(p, slice_x + 0j, Yg)
    mask = (np.abs(yb) <= rc.R) & (np.abs(Yg) <= rc.R)
    lab, n = ndimage.label(mask, structure=np.ones((3, 3)))
    if n != 2:
        raise ComponentCountMismatch(f"found {n} components of H(box) cap box, expected 2")
    centers = []
    for i in (1, 2):
        pts = Yg[lab == i]
        centers.append(complex(pts.mean()))
        mods = np.abs(pts)
        if mods.min() < rc.eta2 - 0.2 or mods.max() > rc.eta1 + 0.2:
            raise ComponentCountMismatch(
                f"component {i} leaves the eta band: [{mods.min():.4g}, {mods.max():.4g}]")
    centers.sort(key=lambda v: (v.real, v.imag))
    rep0, rep1 = component_representatives(p, slice_x + 0j)
    if abs(centers[0] - rep0) > abs(centers[0] - rep1):
        raise ComponentCountMismatch("component centers do not match the sqrt representatives")
    return TubeLabeling(complex(rep0), complex(rep1), tuple(centers),
                        (rc.eta2, rc.eta1))


# -- itineraries ----------------------------------------------------------------

def _check_in_box(geometry: BoxGeometry, u: Point, prev: Point, what: str):
    rc = geometry.rc
    for q in (u, prev):
        if max(abs(q.x), abs(q.y)) > rc.R:
            raise OrbitLeftBox(f"{what}: iterate {q.x:.4g},{q.y:.4g} left the filtration box")
    if not (geometry.in_vtilde(u) and geometry.in_vtilde(prev)):
        raise OrbitLeftBox(f"{what}: iterate left the dynamical box")


def itinerary(p: Params, rc, z: Point, depth_fwd: int, depth_bwd: int,
              geometry: BoxGeometry = None, check: bool = True) -> SymbolCode:
    """Tube address of z: backward word from depth_fwd forward iterates,
    forward word from depth_bwd backward iterates."""
    geometry = geometry or BoxGeometry(p, rc)
    lam = []
    x, y = complex(z.x), complex(z.y)
    prev = Point(x, y)
    for k in range(depth_fwd):
        x, y = forward_xy(p, x, y)
        u = Point(x, y)
        if check:
            _check_in_box(geometry, u, prev, f"forward depth {k + 1}")
        lam.append(h_label(p, u))
        prev = u
    om = []
    x, y = complex(z.x), complex(z.y)
    cur = Point(x, y)
    for j in range(depth_bwd):
        xb, yb = backward_xy(p, x, y)
        prev = Point(xb, yb)
        if check:
            _check_in_box(geometry, cur, prev, f"backward depth {j}")
        om.append(h_label(p, cur))
        x, y = xb, yb
        cur = prev
    return SymbolCode(tuple(lam), tuple(om))


# -- periodic orbits from codes ---------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    word: tuple
    points: tuple        # orbit points z_0 .. z_{q-1} with label(z_k) = word_k
    residual: float      # orbit-closure residual max_i |H(z_i) - z_{i+1 mod q}|
                         # (the return-map residual amplifies by the expansion)

    @property
    def phase_point(self) -> Point:
        """The orbit point whose forward itinerary of length q equals the word."""
        return self.points[-1]


def _one_d_seed(p: Params, word, rounds: int = 60):
    """Backward sign-iteration for the degenerate 1-d map x -> x^2 + c: returns
    u_j with sign pattern matching the requested labels at a = 0."""
    q = len(word)
    rep0, rep1 = component_representatives(p, 0j)
    u = [complex(rep1 if word[(j + 1) % q] else rep0) for j in range(q)]
    for _ in range(rounds):
        for j in reversed(range(q)):
            tgt = rep1 if word[(j + 1) % q] else rep0
            r = np.sqrt(u[(j + 1) % q] - p.c)
            u[j] = r if abs(r - tgt) < abs(-r - tgt) else -r
    return u


def _multishoot(p: Params, zs, tol=1e-12, max_iter=60):
    """Damped Newton on H(z_i) = z_{i+1 mod q}; zs is (q, 2) complex."""
    q = zs.shape[0]
    z = zs.reshape(-1).copy()

    def resid(v):
        pts = v.reshape(q, 2)
        out = np.empty_like(pts)
        for i in range(q):
            fx, fy = forward_xy(p, pts[i, 0], pts[i, 1])
            out[i, 0] = fx - pts[(i + 1) % q, 0]
            out[i, 1] = fy - pts[(i + 1) % q, 1]
        return out.reshape(-1)

    for _ in range(max_iter):
        r = resid(z)
        nr = np.abs(r).max()
        if nr < tol:
            return z.reshape(q, 2), nr
        J = np.zeros((2 * q, 2 * q), dtype=complex)
        pts = z.reshape(q, 2)
        for i in range(q):
            J[2 * i, 2 * i] = 2.0 * pts[i, 0]
            J[2 * i, 2 * i + 1] = -p.a
            J[2 * i + 1, 2 * i] = 1.0
            jn = (i + 1) % q
            J[2 * i, 2 * jn] -= 1.0
            J[2 * i + 1, 2 * jn + 1] -= 1.0
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as e:
            raise NewtonDivergence(f"singular multi-shooting Jacobian: {e}")
        lam = 1.0
        for _ in range(12):
            trial = z - lam * step
            if np.abs(resid(trial)).max() < nr:
                z = trial
                break
            lam *= 0.5
        else:
            raise NewtonDivergence("periodic-orbit Newton stalled")
    raise NewtonDivergence("periodic-orbit Newton did not converge")


def periodic_point(p: Params, rc, word, tol: float = 1e-10,
                   _reseeded: bool = False) -> PeriodicOrbit:
    """Periodic orbit whose orbit labels repeat `word`; multi-shooting Newton
    from the one-dimensional backward-iteration seed."""
    word = tuple(int(w) for w in word)
    q = len(word)
    if q < 1:
        raise ValueError("empty word")
    u = _one_d_seed(p, word)
    zs = np.array([[u[k], u[k - 1]] for k in range(q)], dtype=complex)
    if _reseeded:
        zs *= 1.0 + 1e-3
    pts, _ = _multishoot(p, zs)
    res = 0.0
    for i in range(q):
        fx, fy = forward_xy(p, pts[i, 0], pts[i, 1])
        res = max(res, abs(fx - pts[(i + 1) % q, 0]), abs(fy - pts[(i + 1) % q, 1]))
    if res > tol:
        raise NewtonDivergence(f"periodic orbit residual {res:.3g} above {tol:.3g}")
    got = tuple(h_label(p, Point(pts[k, 0], pts[k, 1])) for k in range(q))
    if got != word:
        if not _reseeded:
            return periodic_point(p, rc, word, tol, _reseeded=True)
        raise WrongItinerary(f"requested {word}, converged to {got}")
    return PeriodicOrbit(word, tuple(Point(pts[k, 0], pts[k, 1]) for k in range(q)),
                         float(res))


# -- nested components on a slice -------------------------------------------------

@dataclass
class _Box:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    @property
    def diag(self):
        return np.hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo)


def _level_mask(p, rc, X, y0, level):
    ok = np.abs(X) <= rc.R
    x, y = X.copy(), np.full_like(X, y0)
    for _ in range(level):
        x, y = forward_xy(p, x, y)
        with np.errstate(over="ignore", invalid="ignore"):
            ok &= np.abs(x) <= rc.R
        x = np.where(ok, x, 0.0)
        y = np.where(ok, y, 0.0)
    return ok


def _split_box(p, rc, box, y0, level, resolution, expect):
    for res in (resolution, 2 * resolution, 4 * resolution):
        g_re = np.linspace(box.re_lo, box.re_hi, res)
        g_im = np.linspace(box.im_lo, box.im_hi, res)
        X = g_re[None, :] + 1j * g_im[:, None]
        mask = _level_mask(p, rc, X, y0, level)
        lab, n = ndimage.label(mask, structure=np.ones((3, 3)))
        if n == expect:
            out = []
            dre = g_re[1] - g_re[0]
            dim = g_im[1] - g_im[0]
            for i in range(1, n + 1):
                pts = X[lab == i]
                out.append(_Box(pts.real.min() - 1.5 * dre, pts.real.max() + 1.5 * dre,
                                pts.imag.min() - 1.5 * dim, pts.imag.max() + 1.5 * dim))
            return out
    raise ResolutionTooCoarse(
        f"level-{level} split of box around ({box.re_lo:.4g},{box.im_lo:.4g}) "
        f"gave {n} components, expected {expect}")


def nested_component_boxes(p: Params, rc, n: int, resolution: int = 160,
                           slice_y: float = 0.31):
    """Bounding boxes of the components of box cap H^{-n}(box) on the complex
    line {y = slice_y}, computed by per-component recursive flood fill."""
    boxes = [_Box(-rc.R, rc.R, -rc.R, rc.R)]
    for level in range(1, n + 1):
        new = []
        expect = 2
        for b in boxes:
            new.extend(_split_box(p, rc, b, slice_y, level, resolution, expect))
        boxes = new
    return boxes


def component_count(p: Params, rc, n: int, resolution: int = 160,
                    slice_y: float = 0.31) -> int:
    if n == 0:
        return 1
    return len(nested_component_boxes(p, rc, n, resolution, slice_y))


def tube_width(p: Params, rc, n: int, resolution: int = 160,
               slice_y: float = 0.31) -> float:
    """Largest component diameter at nesting level n on the slice."""
    return max(b.diag for b in nested_component_boxes(p, rc, n, resolution, slice_y))


# -- tube center curves ------------------------------------------------------------

def _orbit_with_dx(p, x, y, k):
    """Forward orbit coordinates of (x, y) and their d/dx derivatives at step k."""
    vx, vy = complex(x), complex(y)
    dvx, dvy = 1.0 + 0j, 0.0 + 0j
    for _ in range(k):
        vx, dvx, vy, dvy = vx * vx + p.c - p.a * vy, 2.0 * vx * dvx - p.a * dvy, vx, dvx
    return vx, dvx, vy, dvy


def vertical_tube_center_x(p: Params, labels, y, x0=None, tol: float = 1e-12):
    """x with (x, y) on the center curve {h1_n = 0} of the vertical tube whose
    forward labels are `labels` (labels[k] = label of H^{k+1}).  Branch-continued
    Newton through the levels."""
    y = complex(y)
    rep0, rep1 = component_representatives(p, 0j)
    # level 1: x^2 + c - a y = 0, branch by requested label of H(z) = (0, x)
    r = np.sqrt(p.a * y - p.c)
    tgt = rep1 if labels[0] else rep0
    x = r if abs(r - tgt) < abs(-r - tgt) else -r
    if x0 is not None:
        x = complex(x0)
    for k in range(1, len(labels)):
        # next center solves h1_k = sigma * sqrt(a h2_k - c) with the branch
        # sigma chosen so H^{k+1} lands in the requested component
        vx, dvx, vy, dvy = _orbit_with_dx(p, x, y, k)
        root = np.sqrt(p.a * vy - p.c)
        tgt = rep1 if labels[k] else rep0
        root = root if abs(root - tgt) < abs(-root - tgt) else -root
        sgn = root / np.sqrt(p.a * vy - p.c)
        for _ in range(80):
            vx, dvx, vy, dvy = _orbit_with_dx(p, x, y, k)
            s = np.sqrt(p.a * vy - p.c)
            s = sgn * s if abs(sgn * s - tgt) < abs(-sgn * s - tgt) else -sgn * s
            g = vx - s
            dg = dvx - p.a * dvy / (2.0 * s) * np.sign(1.0)
            step = g / dg
            x -= step
            if abs(step) < tol:
                break
        else:
            raise NewtonDivergence(f"tube center continuation stalled at level {k + 1}")
    # final polish on h1_n = 0
    nlev = len(labels)
    for _ in range(60):
        vx, dvx, _, _ = _orbit_with_dx(p, x, y, nlev)
        step = vx / dvx
        x -= step
        if abs(step) < tol:
            return complex(x)
    raise NewtonDivergence("tube center polish did not converge")


def _borbit_with_dy(p, x, y, k):
    """Backward orbit coordinates and their d/dy derivatives at step k."""
    vx, vy = complex(x), complex(y)
    dvx, dvy = 0.0 + 0j, 1.0 + 0j
    for _ in range(k):
        vx, dvx, vy, dvy = vy, dvy, (vy * vy + p.c - vx) / p.a, (2.0 * vy * dvy - dvx) / p.a
    return vx, dvx, vy, dvy


def horizontal_tube_center_y(p: Params, labels, x, tol: float = 1e-12):
    """y with (x, y) on the center curve {h2_{-m} = 0} of the horizontal tube
    with backward labels `labels` (labels[j] = label of H^{-j}); symmetric to
    vertical_tube_center_x."""
    x = complex(x)
    rep0, rep1 = component_representatives(p, 0j)
    r = np.sqrt(x - p.c)
    tgt = rep1 if labels[0] else rep0
    y = r if abs(r - tgt) < abs(-r - tgt) else -r
    for k in range(1, len(labels)):
        vx, dvx, vy, dvy = _borbit_with_dy(p, x, y, k)
        tgt = rep1 if labels[k] else rep0
        for _ in range(80):
            vx, dvx, vy, dvy = _borbit_with_dy(p, x, y, k)
            s = np.sqrt(vx - p.c)
            s = s if abs(s - tgt) < abs(-s - tgt) else -s
            g = vy - s
            dg = dvy - dvx / (2.0 * s)
            step = g / dg
            y -= step
            if abs(step) < tol:
                break
        else:
            raise NewtonDivergence(f"horizontal tube center stalled at level {k + 1}")
    m = len(labels)
    for _ in range(60):
        _, _, vy, dvy = _borbit_with_dy(p, x, y, m)
        step = vy / dvy
        y -= step
        if abs(step) < tol:
            return complex(y)
    raise NewtonDivergence("horizontal tube center polish did not converge")


# -- Delta regions and straightening ------------------------------------------------

@dataclass
class DeltaRegion:
    code: SymbolCode
    center: Point
    samples: tuple            # ((point, (u, v)), ...)
    min_partial_F: float      # min |d h1_k / dx| over samples (k > 0)
    min_partial_G: float      # min |d h2_{-m} / dy| over samples (m > 0)


def _uv_maps(p, code):
    k, m = len(code.backward), len(code.forward)

    def uval(x, y):
        vx, dvx, vy, dvy = _orbit_with_dx(p, x, y, k) if k else (x, 1.0, y, 0.0)
        return vx, dvx

    def uval_dy(x, y):
        vx, vy = complex(x), complex(y)
        dvx, dvy = 0.0 + 0j, 1.0 + 0j
        for _ in range(k):
            vx, dvx, vy, dvy = vx * vx + p.c - p.a * vy, 2 * vx * dvx - p.a * dvy, vx, dvx
        return dvx

    def vval(x, y):
        vx, dvx, vy, dvy = _borbit_with_dy(p, x, y, m) if m else (x, 0.0, y, 1.0)
        return vy, dvy

    def vval_dx(x, y):
        vx, vy = complex(x), complex(y)
        dvx, dvy = 1.0 + 0j, 0.0 + 0j
        for _ in range(m):
            vx, dvx, vy, dvy = vy, dvy, (vy * vy + p.c - vx) / p.a, (2 * vy * dvy - dvx) / p.a
        return dvy

    return uval, uval_dy, vval, vval_dx


def solve_uv(p: Params, code: SymbolCode, u, v, seed: Point,
             tol: float = 1e-11, max_iter: int = 60) -> Point:
    """Solve h1_k(z) = u, h2_{-m}(z) = v by 2x2 Newton from `seed`."""
    uval, uval_dy, vval, vval_dx = _uv_maps(p, code)
    x, y = complex(seed.x), complex(seed.y)
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        fu, fu_x = uval(x, y)
        fv, fv_y = vval(x, y)
        r1, r2 = fu - u, fv - v
        noise = (100.0 * eps * (abs(fu_x) + abs(fv_y)) * (1.0 + abs(x) + abs(y)))
        if max(abs(r1), abs(r2)) < max(tol, noise):
            return Point(x, y)
        j11, j12 = fu_x, uval_dy(x, y)
        j21, j22 = vval_dx(x, y), fv_y
        det = j11 * j22 - j12 * j21
        if det == 0:
            raise NewtonDivergence("singular straightening Jacobian")
        x -= (j22 * r1 - j12 * r2) / det
        y -= (-j21 * r1 + j11 * r2) / det
    raise NewtonDivergence("u-v solve did not converge")


def delta_center(p: Params, rc, code: SymbolCode) -> Point:
    """Center of the Delta region: h1_k = 0 = h2_{-m}, seeded from the two
    tube-center curves.  With one empty word the center sits on an axis and
    the matching tube-center solve is already exact."""
    k, m = len(code.backward), len(code.forward)
    if k == 0 and m == 0:
        return Point(0.0, 0.0)
    if k == 0:
        return Point(0.0, horizontal_tube_center_y(p, code.forward, 0.0))
    if m == 0:
        return Point(vertical_tube_center_x(p, code.backward, 0.0), 0.0)
    x, y = 0.0 + 0j, 0.0 + 0j
    for _ in range(3):
        x = vertical_tube_center_x(p, code.backward, y)
        y = horizontal_tube_center_y(p, code.forward, x)
    return solve_uv(p, code, 0.0, 0.0, Point(x, y))


def delta_region(p: Params, rc, code: SymbolCode, grid: int = 5,
                 radius_frac: float = 0.8, tol: float = 1e-11,
                 geometry: BoxGeometry = None) -> DeltaRegion:
    """Sample the straightened polydisk of the region addressed by `code` and
    verify the straightening partials are bounded away from zero."""
    k, m = len(code.backward), len(code.forward)
    if k + m > 8:
        raise ValueError("code too deep")
    center = delta_center(p, rc, code)
    r_u = radius_frac * rc.gamma2 * rc.R
    r_v = radius_frac * rc.gamma2 * rc.R
    uval, uval_dy, vval, vval_dx = _uv_maps(p, code)
    samples = []
    min_pf, min_pg = np.inf, np.inf
    prev = center
    for iu in range(grid):
        for iv in range(grid):
            u = r_u * (2 * iu / (grid - 1) - 1) if grid > 1 else 0.0
            v = r_v * (2 * iv / (grid - 1) - 1) if grid > 1 else 0.0
            zp = solve_uv(p, code, u, v, prev, tol)
            prev = zp
            _, fu_x = uval(zp.x, zp.y)
            _, fv_y = vval(zp.x, zp.y)
            if k:
                min_pf = min(min_pf, abs(fu_x))
            if m:
                min_pg = min(min_pg, abs(fv_y))
            samples.append((zp, (complex(u), complex(v))))
        prev = samples[-grid][0]
    scale = max(1.0, abs(p.c))
    if k and min_pf < 1e-8 * scale:
        raise StraighteningDegenerate(f"d h1_{k}/dx collapsed to {min_pf:.3g}")
    if m and min_pg < 1e-8 * scale:
        raise StraighteningDegenerate(f"d h2_-{m}/dy collapsed to {min_pg:.3g}")
    return DeltaRegion(code, center, tuple(samples),
                       float(min_pf if k else np.inf),
                       float(min_pg if m else np.inf))


# -- conjugacy ----------------------------------------------------------------------

def tau_approx(p: Params, rc, window) -> Point:
    """Finite-window approximation of the coding homeomorphism: the point of
    the periodic orbit of the window whose orbit labels match the window read
    as s_{-d} ... s_{d}."""
    window = tuple(int(w) for w in window)
    depth = (len(window) - 1) // 2
    orbit = periodic_point(p, rc, window)
    return orbit.points[depth % len(window)]


def conjugacy_check(p: Params, rc, word, depth: int) -> float:
    """Distance d(H(tau(w)), tau(sigma w)) on central windows of width
    2 depth + 1; cyclic wrap supplies the one extra symbol if needed.

    The defect is bounded by the diameter of the (depth - 1)-level tube:
    applying H costs one nesting level."""
    word = tuple(int(w) for w in word)
    if len(word) < 2 * depth + 1:
        raise ValueError("word shorter than the requested window")
    mid = len(word) // 2
    take = lambda off: tuple(word[(mid - depth + off + i) % len(word)]
                             for i in range(2 * depth + 1))
    z = tau_approx(p, rc, take(0))
    zs = tau_approx(p, rc, take(1))
    hx, hy = forward_xy(p, z.x, z.y)
    return float(max(abs(hx - zs.x), abs(hy - zs.y)))
