"""Escape rates and the logarithmic Bottcher derivative fields.

The plus-side escape rate is the dyadic limit 2^{-n} log|x_n| along the
forward orbit; the minus side uses the second backward coordinate with the
a-normalization.  The gradient pair (d/dx log phi, d/dy log phi) is obtained
from the same limit by exact chain rule: at depth n the estimate is

    2^{-n} (D H^{+-n}_z)^T  (1/xi_n, 0)    resp.   ... (0, 1/eta_n),

which is exact up to the far-field approximation of the gradient at the deep
endpoint, so the error dies doubly exponentially once the orbit clears the
filtration radius.  Second derivatives propagate through the same recursion as
order-2 jets, giving the exact gradient of the tangency function w.

Everything is batched: points enter as complex arrays, a status code per point
reports ok / not-escaping / slow convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Params
from .errors import NotEscaping, SlowConvergence, ZeroGradient

OK, NOT_ESCAPING, SLOW = 0, 1, 2

# Once the leading coordinate clears this, remaining dyadic corrections are
# below double precision; stop deepening to keep jets far from overflow.
_SETTLED = 1e12


@dataclass
class JetBatch:
    """Converged per-point data for one sign of the escape analysis."""

    status: np.ndarray        # int8: OK / NOT_ESCAPING / SLOW
    depth: np.ndarray         # dyadic depth actually used
    green: np.ndarray         # escape rate
    lx: np.ndarray            # d log phi / dx
    ly: np.ndarray            # d log phi / dy
    hxx: np.ndarray = None    # second derivatives (order-2 runs only)
    hxy: np.ndarray = None
    hyy: np.ndarray = None
    trunc: np.ndarray = None  # last dyadic increment of (lx, ly), max-norm

    @property
    def ok(self):
        return self.status == OK


def _jets(p: Params, X, Y, sign: str, tol: float, max_depth: int, order: int) -> JetBatch:
    """Propagate order-`order` jets of the orbit map and form dyadic estimates.

    Per point the jet state is the value/gradient/Hessian of both coordinates
    of H^{+-n} with respect to the starting point.  A point freezes once its
    gradient estimate moves by less than tol (max-norm, relative to scale 1)
    or its leading coordinate exceeds the settle threshold.
    """
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    Y = np.atleast_1d(np.asarray(Y, dtype=complex))
    n = X.shape[0]
    c, a = p.c, p.a
    plus = sign == "plus"

    vx, vy = X.copy(), Y.copy()
    one, zero = np.ones(n, dtype=complex), np.zeros(n, dtype=complex)
    gx1, gx2 = one.copy(), zero.copy()     # grad of first coordinate
    gy1, gy2 = zero.copy(), one.copy()     # grad of second coordinate
    if order >= 2:
        hx11 = zero.copy(); hx12 = zero.copy(); hx22 = zero.copy()
        hy11 = zero.copy(); hy12 = zero.copy(); hy22 = zero.copy()

    status = np.full(n, NOT_ESCAPING, dtype=np.int8)
    depth = np.zeros(n, dtype=np.int64)
    green = np.zeros(n)
    lx = np.zeros(n, dtype=complex)
    ly = np.zeros(n, dtype=complex)
    trunc = np.full(n, np.inf)
    if order >= 2:
        oxx = np.zeros(n, dtype=complex); oxy = np.zeros(n, dtype=complex)
        oyy = np.zeros(n, dtype=complex)

    active = np.ones(n, dtype=bool)
    prev_lx = np.full(n, np.inf, dtype=complex)
    prev_ly = np.full(n, np.inf, dtype=complex)
    scale = 1.0

    for step in range(1, max_depth + 1):
        if not active.any():
            break
        scale *= 0.5
        if plus:
            nvx = vx * vx + c - a * vy
            ngx1 = 2.0 * vx * gx1 - a * gy1
            ngx2 = 2.0 * vx * gx2 - a * gy2
            if order >= 2:
                nhx11 = 2.0 * (gx1 * gx1 + vx * hx11) - a * hy11
                nhx12 = 2.0 * (gx1 * gx2 + vx * hx12) - a * hy12
                nhx22 = 2.0 * (gx2 * gx2 + vx * hx22) - a * hy22
                hy11, hy12, hy22 = hx11, hx12, hx22
                hx11, hx12, hx22 = nhx11, nhx12, nhx22
            vy = vx; vx = nvx
            gy1, gy2 = gx1, gx2
            gx1, gx2 = ngx1, ngx2
            lead, le1, le2 = vx, gx1, gx2
            if order >= 2:
                he11, he12, he22 = hx11, hx12, hx22
        else:
            nvy = (vy * vy + c - vx) / a
            ngy1 = (2.0 * vy * gy1 - gx1) / a
            ngy2 = (2.0 * vy * gy2 - gx2) / a
            if order >= 2:
                nhy11 = (2.0 * (gy1 * gy1 + vy * hy11) - hx11) / a
                nhy12 = (2.0 * (gy1 * gy2 + vy * hy12) - hx12) / a
                nhy22 = (2.0 * (gy2 * gy2 + vy * hy22) - hx22) / a
                hx11, hx12, hx22 = hy11, hy12, hy22
                hy11, hy12, hy22 = nhy11, nhy12, nhy22
            vx = vy; vy = nvy
            gx1, gx2 = gy1, gy2
            gy1, gy2 = ngy1, ngy2
            lead, le1, le2 = vy, gy1, gy2
            if order >= 2:
                he11, he12, he22 = hy11, hy12, hy22

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            est_lx = scale * le1 / lead
            est_ly = scale * le2 / lead
            alead = np.abs(lead)
            est_g = scale * np.log(alead)
            if not plus:
                est_g = est_g - scale * np.log(abs(a))
            diff = np.maximum(np.abs(est_lx - prev_lx), np.abs(est_ly - prev_ly))
            settled = active & (alead > _SETTLED)
            good = active & np.isfinite(diff) & (diff < tol) & (alead > 1.0)
            done = settled | good
            if step == max_depth:
                # whoever is still active but clearly escaping gets flagged slow
                esc = active & ~done & (alead > 10.0 * max(1.0, abs(c)))
                status[esc] = SLOW
                done = done | esc
            if done.any():
                status[done] = np.where(status[done] == SLOW, SLOW, OK)
                depth[done] = step
                green[done] = est_g[done]
                lx[done] = est_lx[done]
                ly[done] = est_ly[done]
                trunc[done] = diff[done]
                if order >= 2:
                    exx = scale * (he11 / lead - (le1 / lead) ** 2)
                    exy = scale * (he12 / lead - le1 * le2 / lead ** 2)
                    eyy = scale * (he22 / lead - (le2 / lead) ** 2)
                    oxx[done] = exx[done]; oxy[done] = exy[done]; oyy[done] = eyy[done]
                active &= ~done
        prev_lx, prev_ly = est_lx, est_ly
        # keep frozen lanes from overflowing by pinning their jets
        if not active.all():
            frozen = ~active
            vx[frozen] = 2.0; vy[frozen] = 2.0
            gx1[frozen] = 0; gx2[frozen] = 0; gy1[frozen] = 0; gy2[frozen] = 0
            if order >= 2:
                for arr in (hx11, hx12, hx22, hy11, hy12, hy22):
                    arr[frozen] = 0

    if order >= 2:
        return JetBatch(status, depth, green, lx, ly, oxx, oxy, oyy, trunc)
    return JetBatch(status, depth, green, lx, ly, trunc=trunc)


def plus_jets(p, X, Y, tol=1e-11, max_depth=200, order=2) -> JetBatch:
    return _jets(p, X, Y, "plus", tol, max_depth, order)


def minus_jets(p, X, Y, tol=1e-11, max_depth=200, order=2) -> JetBatch:
    return _jets(p, X, Y, "minus", tol, max_depth, order)


# -- scalar API ----------------------------------------------------------------

@dataclass(frozen=True)
class GreenValue:
    value: float
    depth_used: int


@dataclass(frozen=True)
class CotangentPair:
    dx: complex
    dy: complex
    depth_used: int
    truncation_estimate: float

    def tangent(self):
        """Unit leaf tangent (-dy, dx)/||.||, max-norm normalized."""
        nrm = max(abs(self.dx), abs(self.dy))
        if nrm == 0.0 or not np.isfinite(nrm):
            raise ZeroGradient("gradient pair vanished; tangent undefined")
        return -self.dy / nrm, self.dx / nrm


def _raise_bad(status: int, sign: str):
    if status == NOT_ESCAPING:
        raise NotEscaping(f"point bounded at tested depth ({sign} side)")
    if status == SLOW:
        raise SlowConvergence(f"dyadic refinement not settled ({sign} side)")


def green(p: Params, rc, z, sign: str = "plus", tol: float = 1e-11,
          max_depth: int = 200) -> GreenValue:
    b = _jets(p, [z.x], [z.y], sign, tol, max_depth, order=0)
    _raise_bad(int(b.status[0]), sign)
    return GreenValue(float(b.green[0]), int(b.depth[0]))


def log_bottcher_gradient(p: Params, rc, z, sign: str = "plus",
                          tol: float = 1e-11, max_depth: int = 200) -> CotangentPair:
    b = _jets(p, [z.x], [z.y], sign, tol, max_depth, order=1)
    _raise_bad(int(b.status[0]), sign)
    return CotangentPair(complex(b.lx[0]), complex(b.ly[0]),
                         int(b.depth[0]), float(b.trunc[0]))


def leaf_tangent(p: Params, rc, z, sign: str = "plus", tol: float = 1e-11,
                 max_depth: int = 200):
    return log_bottcher_gradient(p, rc, z, sign, tol, max_depth).tangent()


# -- the tangency-defining function w ------------------------------------------

@dataclass
class WBatch:
    """w = Lx+ Ly- - Ly+ Lx- with its exact gradient and both cotangent pairs."""

    status: np.ndarray
    w: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    plus: JetBatch
    minus: JetBatch

    @property
    def ok(self):
        return self.status == OK

    def norms(self):
        """Max-norms of the two gradient pairs (for scale-free residuals)."""
        np_ = np.maximum(np.abs(self.plus.lx), np.abs(self.plus.ly))
        nm = np.maximum(np.abs(self.minus.lx), np.abs(self.minus.ly))
        return np_, nm

    @property
    def w_normalized(self):
        np_, nm = self.norms()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(self.w) / (np_ * nm)


def w_batch(p: Params, X, Y, tol: float = 1e-11, max_depth: int = 200,
            order: int = 2) -> WBatch:
    bp = _jets(p, X, Y, "plus", tol, max_depth, order)
    bm = _jets(p, X, Y, "minus", tol, max_depth, order)
    status = np.maximum(bp.status, bm.status)
    w = bp.lx * bm.ly - bp.ly * bm.lx
    if order >= 2:
        wx = (bp.hxx * bm.ly + bp.lx * bm.hxy - bp.hxy * bm.lx - bp.ly * bm.hxx)
        wy = (bp.hxy * bm.ly + bp.lx * bm.hyy - bp.hyy * bm.lx - bp.ly * bm.hxy)
    else:
        wx = wy = np.full_like(w, np.nan)
    return WBatch(status, w, wx, wy, bp, bm)


def defining_w(p: Params, rc, z, tol: float = 1e-11, max_depth: int = 200) -> complex:
    b = w_batch(p, [z.x], [z.y], tol, max_depth, order=1)
    _raise_bad(int(b.status[0]), "both")
    return complex(b.w[0])


def defining_w_normalized(p: Params, rc, z, tol: float = 1e-11,
                          max_depth: int = 200) -> float:
    b = w_batch(p, [z.x], [z.y], tol, max_depth, order=1)
    _raise_bad(int(b.status[0]), "both")
    return float(b.w_normalized[0])
