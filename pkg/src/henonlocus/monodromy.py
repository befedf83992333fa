"""Parameter-loop monodromy on the symbolic coding.

All periodic orbits of period <= p are solved at the loop base point, carried
around the loop by Newton continuation (step count doubling on collision),
and re-coded at closure; the induced word permutation is the monodromy action
on the tracked part of the shift space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Params, Point, forward_xy
from .errors import CertificationLost, NewtonDivergence, StepCollision
from .region import hov_beta_membership, radius_window, region_constants
from .coding import h_label_xy


@dataclass(frozen=True)
class ParameterLoop:
    """Closed path t in [0,1] -> (c(t), a(t)) with a certified base point."""

    base: Params
    path: object            # callable t -> (c, a)
    steps: int = 128
    name: str = "loop"

    def params_at(self, t: float) -> Params:
        c, a = self.path(t)
        return Params(c, a)


def loop_in_a(base: Params, steps: int = 128) -> ParameterLoop:
    """a(t) = a0 e^{2 pi i t} around a = 0 at fixed c."""
    return ParameterLoop(base, lambda t: (base.c, base.a * np.exp(2j * np.pi * t)),
                         steps, "a-loop")


def loop_in_c(base: Params, steps: int = 128) -> ParameterLoop:
    """c(t) = c0 e^{2 pi i t} around the connectedness locus at fixed a."""
    return ParameterLoop(base, lambda t: (base.c * np.exp(2j * np.pi * t), base.a),
                         steps, "c-loop")


@dataclass
class ShiftAutomorphism:
    """Permutation of the period-q words for each q <= p."""

    period: int
    maps: dict = field(default_factory=dict)   # q -> {word: word}

    def __call__(self, word):
        return self.maps[len(word)][tuple(word)]

    def is_identity(self) -> bool:
        return all(w == v for perm in self.maps.values() for w, v in perm.items())

    def is_bit_flip(self) -> bool:
        return all(tuple(1 - s for s in w) == v
                   for perm in self.maps.values() for w, v in perm.items())

    def commutes_with_shift(self) -> bool:
        for q, perm in self.maps.items():
            for w, v in perm.items():
                rw = w[1:] + w[:1]
                if perm[rw] != v[1:] + v[:1]:
                    return False
        return True

    def compose(self, other: "ShiftAutomorphism") -> "ShiftAutomorphism":
        maps = {q: {w: self.maps[q][v] for w, v in perm.items()}
                for q, perm in other.maps.items()}
        return ShiftAutomorphism(self.period, maps)

    def __eq__(self, other):
        return isinstance(other, ShiftAutomorphism) and self.maps == other.maps


def _orbit_matrix(p: Params, words):
    """Stacked orbit seeds for all `words` of a common period q via the
    one-dimensional backward iteration (labels = sign pattern at a = 0)."""
    from .coding import _one_d_seed
    q = len(words[0])
    Z = np.empty((len(words), q, 2), dtype=complex)
    for i, w in enumerate(words):
        u = _one_d_seed(p, w)
        for j in range(q):
            Z[i, j, 0] = u[j]
            Z[i, j, 1] = u[j - 1]
    return Z


def _newton_orbits(p: Params, Z, tol=1e-11, max_iter=40):
    """Newton on H(z_j) = z_{j+1 mod q} for a stack of orbits (n, q, 2)."""
    n, q, _ = Z.shape
    for _ in range(max_iter):
        fx, fy = forward_xy(p, Z[:, :, 0], Z[:, :, 1])
        R = np.empty((n, q, 2), dtype=complex)
        R[:, :, 0] = fx - np.roll(Z[:, :, 0], -1, axis=1)
        R[:, :, 1] = fy - np.roll(Z[:, :, 1], -1, axis=1)
        nr = np.abs(R).max()
        if nr < tol:
            return Z, nr
        J = np.zeros((n, 2 * q, 2 * q), dtype=complex)
        idx = np.arange(q)
        J[:, 2 * idx, 2 * idx] = 2.0 * Z[:, :, 0]
        J[:, 2 * idx, 2 * idx + 1] = -p.a
        J[:, 2 * idx + 1, 2 * idx] = 1.0
        jn = (idx + 1) % q
        J[:, 2 * idx, 2 * jn] += -1.0
        J[:, 2 * idx + 1, 2 * jn + 1] += -1.0
        try:
            step = np.linalg.solve(J, R.reshape(n, 2 * q, 1))[:, :, 0]
        except np.linalg.LinAlgError as e:
            raise NewtonDivergence(f"singular continuation Jacobian: {e}")
        Z = Z - step.reshape(n, q, 2)
    raise NewtonDivergence("periodic-set Newton did not converge")


def _check_certified(pt: Params, beta, gamma1, gamma2):
    member, _ = hov_beta_membership(pt, beta)
    if not member:
        raise CertificationLost(f"loop left the region at c={pt.c}, a={pt.a}")
    radius_window(pt, gamma1, gamma2)   # raises EmptyWindow when lost


def continue_periodic_set(loop: ParameterLoop, period: int,
                          collision_tol: float = 1e-6,
                          max_steps: int = 1024,
                          beta: float = None) -> ShiftAutomorphism:
    """Track all 2^q periodic orbits for q <= period around the loop and
    return the induced word permutation at closure."""
    if period > 8:
        raise ValueError("period > 8")
    from .region import BETA_DEFAULT, GAMMA1_DEFAULT, GAMMA2_DEFAULT
    beta = beta if beta is not None else BETA_DEFAULT
    rc = region_constants(loop.base)

    steps = loop.steps
    while True:
        try:
            return _run_loop(loop, period, steps, collision_tol, beta, rc)
        except StepCollision:
            if steps * 2 > max_steps:
                raise
            steps *= 2


def _run_loop(loop, period, steps, collision_tol, beta, rc):
    from .region import GAMMA1_DEFAULT, GAMMA2_DEFAULT
    base = loop.base
    words_by_q = {q: list(itertools.product((0, 1), repeat=q))
                  for q in range(1, period + 1)}
    stacks = {}
    for q, words in words_by_q.items():
        Z, _ = _newton_orbits(base, _orbit_matrix(base, words))
        stacks[q] = Z
        _assert_separated(Z, collision_tol, q, 0)

    for s in range(1, steps + 1):
        pt = loop.params_at(s / steps)
        _check_certified(pt, beta, GAMMA1_DEFAULT, GAMMA2_DEFAULT)
        for q in stacks:
            stacks[q], _ = _newton_orbits(pt, stacks[q])
            _assert_separated(stacks[q], collision_tol, q, s)

    maps = {}
    for q, words in words_by_q.items():
        Z = stacks[q]
        perm = {}
        for i, w in enumerate(words):
            labels = tuple(int(l) for l in
                           h_label_xy(base, Z[i, :, 0], Z[i, :, 1]))
            if labels not in set(words):
                raise NewtonDivergence(f"closure orbit label {labels} invalid")
            perm[w] = labels
        if sorted(perm.values()) != sorted(words):
            raise StepCollision(f"period-{q} closure map is not a bijection")
        maps[q] = perm
    return ShiftAutomorphism(period, maps)


def _assert_separated(Z, tol, q, step):
    pts = Z.reshape(Z.shape[0], -1)
    d = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
    np.fill_diagonal(d, np.inf)
    if d.min() < tol:
        raise StepCollision(
            f"period-{q} orbits within {d.min():.3g} at step {step}")


def loop_around_a0(base: Params, steps: int = 128, period: int = 5) -> ShiftAutomorphism:
    return continue_periodic_set(loop_in_a(base, steps), period)


def loop_around_mandelbrot(base: Params, steps: int = 128, period: int = 5) -> ShiftAutomorphism:
    return continue_periodic_set(loop_in_c(base, steps), period)
