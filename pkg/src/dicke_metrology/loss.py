"""Particle loss on Dicke-diagonal states as a Markov chain on weights.

Losing one particle from ``|n_k - l, l>`` removes a mode-``b`` particle with
probability ``l / n_k`` and a mode-``a`` particle otherwise, so the weight
vector over Dicke index ``l`` evolves with a bidiagonal column-stochastic
step matrix.  The four-mode chain does the same on occupation 4-tuples.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .spin_algebra import SpinSector
from .states import DickeMixture


def loss_step_matrix(n_k, m, exact=False):
    """(m+1) x (m+1) step matrix for a loss from ``n_k`` particles.

    Column ``l`` keeps weight ``1 - l/n_k`` at index ``l`` and moves ``l/n_k``
    to index ``l - 1``.  With ``exact=True`` the entries are Fractions.
    """
    if n_k < 1:
        raise DomainError("cannot lose a particle from the vacuum (n_k = 0)")
    if m < 0:
        raise DomainError(f"Dicke index must be non-negative, got {m}")
    if exact:
        q = [[Fraction(0)] * (m + 1) for _ in range(m + 1)]
        for l in range(m + 1):
            q[l][l] = 1 - Fraction(l, n_k)
            if l:
                q[l - 1][l] = Fraction(l, n_k)
        return q
    l = np.arange(m + 1, dtype=float)
    return np.diag(1 - l / n_k) + np.diag(l[1:] / n_k, k=1)


@dataclass(frozen=True)
class LossChain:
    """The step matrices taking ``|N - m, m>`` through ``K`` losses."""

    n_particles: int
    start_index: int
    loss_count: int

    def __post_init__(self):
        _check_loss_args(self.n_particles, self.start_index, self.loss_count)

    def steps(self, exact=False):
        return [loss_step_matrix(self.n_particles - k, self.start_index, exact) for k in range(self.loss_count)]

    def final_weights(self, exact=False):
        m = self.start_index
        if exact:
            p = [Fraction(0)] * m + [Fraction(1)]
            for k in range(self.loss_count):
                n_k = self.n_particles - k
                p = [p[l] * (1 - Fraction(l, n_k)) + (p[l + 1] * Fraction(l + 1, n_k) if l < m else 0)
                     for l in range(m + 1)]
            return p
        p = np.zeros(m + 1)
        p[m] = 1.0
        l = np.arange(m + 1, dtype=float)
        for k in range(self.loss_count):
            n_k = self.n_particles - k
            moved = p * l / n_k
            p = p - moved
            p[:-1] += moved[1:]
        return p


def _check_loss_args(n, m, k):
    if n < 0 or m < 0 or m > n:
        raise DomainError(f"invalid start state |{n - m}, {m}>")
    if k < 0 or (k > 0 and k >= n - m):
        raise DomainError(f"loss count K={k} must satisfy 0 <= K < N - m = {n - m}")


def apply_loss(n_particles, m, loss_count, exact=False):
    """Dicke mixture left after losing ``loss_count`` particles from ``|N-m, m>``.

    ``m`` is the Dicke index (occupation of mode ``b``); the twin-Fock
    state is ``m = N/2``.  Returns a :class:`DickeMixture` on the sector with
    ``N - K`` particles, or a list of Fractions when ``exact=True``.
    """
    chain = LossChain(n_particles, m, loss_count)
    p = chain.final_weights(exact=exact)
    dim = n_particles - loss_count + 1
    if exact:
        return list(p) + [Fraction(0)] * (dim - len(p))
    w = np.zeros(dim)
    w[: len(p)] = p
    return DickeMixture(SpinSector(n_particles - loss_count), w)


def lossy_twin_fock(n_particles, loss_count):
    """rho_{N,K}: the twin-Fock state after ``loss_count`` losses."""
    if n_particles % 2:
        raise DomainError(f"twin-Fock state needs even N, got {n_particles}")
    return apply_loss(n_particles, n_particles // 2, loss_count)


def four_mode_loss(start, loss_count):
    """Occupation-tuple weights after losing ``loss_count`` particles.

    Each step sends tuple ``l`` to ``l - e_j`` with probability
    ``l_j / |l|_1``.  Returns a dict ``{tuple: probability}`` with tuples in
    lexicographic order and zero weights dropped.
    """
    start = tuple(int(x) for x in start)
    if any(x < 0 for x in start):
        raise DomainError(f"occupations must be non-negative, got {start}")
    total = sum(start)
    if loss_count < 0 or (loss_count > 0 and loss_count >= total):
        raise DomainError(f"loss count K={loss_count} must satisfy 0 <= K < |start|_1 = {total}")
    p = np.zeros(tuple(x + 1 for x in start))
    p[start] = 1.0
    grids = np.indices(p.shape)
    ndim = len(start)
    for k in range(loss_count):
        n_k = total - k
        new = np.zeros_like(p)
        for j in range(ndim):
            flow = p * grids[j] / n_k
            src = [slice(None)] * ndim
            dst = [slice(None)] * ndim
            src[j] = slice(1, None)
            dst[j] = slice(None, -1)
            new[tuple(dst)] += flow[tuple(src)]
        p = new
    nz = np.argwhere(p > 0)
    return {tuple(int(x) for x in idx): float(p[tuple(idx)]) for idx in nz}


def loss_trajectory(n_particles, m, max_loss):
    """Yield (K, DickeMixture) for K = 0..max_loss, one chain step at a time."""
    _check_loss_args(n_particles, m, max_loss)
    p = np.zeros(m + 1)
    p[m] = 1.0
    l = np.arange(m + 1, dtype=float)
    for k in range(max_loss + 1):
        w = np.zeros(n_particles - k + 1)
        w[: m + 1] = p
        yield k, DickeMixture(SpinSector(n_particles - k), w)
        moved = p * l / (n_particles - k)
        p = p - moved
        p[:-1] += moved[1:]
