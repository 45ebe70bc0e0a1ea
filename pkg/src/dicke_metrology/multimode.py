"""Two interferometers fed by one four-mode bosonic probe.

Modes are ordered (a1, b1, a2, b2); the pair (a_j, b_j) enters the j-th
Mach-Zehnder interferometer with local generator Jy_j.  Occupation tuples are
listed in lexicographic order.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from .errors import DomainError
from .loss import four_mode_loss, lossy_twin_fock
from .metrology import (
    MomentMatrixResult,
    ParametrizedFamily,
    _moments,
    jy_couplings,
    qfi_diagonal_tridiagonal,
    qfi_mixed,
    snr_quadratic_form,
)
from .spin_algebra import SpinSector, build_spin_operators, quadratic_observables, rotation
from .states import PureState


class FourModeBasis:
    """All occupation 4-tuples with total ``n_particles``."""

    def __init__(self, n_particles):
        if n_particles < 0:
            raise DomainError(f"particle number must be non-negative, got {n_particles}")
        self.n_particles = int(n_particles)
        m = self.n_particles
        tuples = [(a1, b1, a2, m - a1 - b1 - a2)
                  for a1 in range(m + 1)
                  for b1 in range(m - a1 + 1)
                  for a2 in range(m - a1 - b1 + 1)]
        self.tuples = tuples
        self.index = {t: i for i, t in enumerate(tuples)}
        self.dim = len(tuples)

    def __repr__(self):
        return f"FourModeBasis({self.n_particles})"

    def __eq__(self, other):
        return isinstance(other, FourModeBasis) and other.n_particles == self.n_particles

    def __hash__(self):
        return hash(("FourModeBasis", self.n_particles))

    @cached_property
    def occupations(self):
        return np.array(self.tuples, dtype=int).reshape(-1, 4)

    def vector(self, weights):
        """Dense vector from a ``{tuple: amplitude}`` map."""
        v = np.zeros(self.dim, dtype=complex)
        for t, a in weights.items():
            v[self.index[tuple(t)]] = a
        return v


def split_state(n_particles):
    """TF state with both internal modes split 50/50 between two locations."""
    if n_particles % 2:
        raise DomainError(f"split state needs even N, got {n_particles}")
    half = n_particles // 2
    basis = FourModeBasis(n_particles)
    binom = np.array([math.comb(half, k) for k in range(half + 1)], dtype=float)
    amps = {}
    for ka, kb in itertools.product(range(half + 1), repeat=2):
        amps[(ka, kb, half - ka, half - kb)] = math.sqrt(binom[ka] * binom[kb]) / 2 ** half
    v = basis.vector(amps)
    return PureState(basis, v / np.linalg.norm(v))


def doubled_tf(n_particles):
    """|N/4, N/4, N/4, N/4>."""
    if n_particles % 4:
        raise DomainError(f"doubled TF state needs N divisible by 4, got {n_particles}")
    q = n_particles // 4
    basis = FourModeBasis(n_particles)
    return PureState(basis, basis.vector({(q, q, q, q): 1.0}))


def _raising(basis, pair):
    """Sparse a_j^dagger b_j on the four-mode basis."""
    ia, ib = 2 * pair, 2 * pair + 1
    rows, cols, vals = [], [], []
    for col, t in enumerate(basis.tuples):
        if t[ib] == 0:
            continue
        new = list(t)
        new[ia] += 1
        new[ib] -= 1
        rows.append(basis.index[tuple(new)])
        cols.append(col)
        vals.append(math.sqrt((t[ia] + 1) * t[ib]))
    return sps.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex)


def local_generators(basis):
    """Local spin operators for both mode pairs.

    Keys: ``Jx1 Jy1 Jz1 Jplus1`` (and ``...2``) plus ``quad1``/``quad2``, the
    lists [Jz^2, (J+^2 + h.c.)/2, (Jz J+ + h.c.)/2, Jx] of each pair.  All
    matrices are scipy sparse CSR.
    """
    out = {}
    occ = basis.occupations
    for pair in (0, 1):
        tag = str(pair + 1)
        jp = _raising(basis, pair)
        jm = jp.conj().T.tocsr()
        jz = sps.diags((occ[:, 2 * pair] - occ[:, 2 * pair + 1]) / 2.0).astype(complex).tocsr()
        jx = ((jp + jm) / 2).tocsr()
        jy = ((jp - jm) / 2j).tocsr()
        jp2 = jp @ jp
        jzjp = jz @ jp
        out["Jplus" + tag] = jp
        out["Jx" + tag] = jx
        out["Jy" + tag] = jy
        out["Jz" + tag] = jz
        out["quad" + tag] = [
            (jz @ jz).tocsr(),
            ((jp2 + jp2.conj().T) / 2).tocsr(),
            ((jzjp + jzjp.conj().T) / 2).tocsr(),
            jx,
        ]
    return out


# ------------------------------------------------------------ lossy probe

@dataclass(frozen=True)
class PairBlock:
    """Weights of a four-mode Dicke mixture with fixed pair particle numbers.

    ``weights[b1, b2]`` is the probability of (m1 - b1, b1, m2 - b2, b2).
    """

    m1: int
    m2: int
    weights: np.ndarray


def pair_blocks(weights):
    """Group ``{tuple: probability}`` by the split (a1 + b1, a2 + b2)."""
    grouped = {}
    for (a1, b1, a2, b2), p in weights.items():
        key = (a1 + b1, a2 + b2)
        if key not in grouped:
            grouped[key] = np.zeros((key[0] + 1, key[1] + 1))
        grouped[key][b1, b2] += p
    return [PairBlock(m1, m2, w) for (m1, m2), w in sorted(grouped.items())]


def lossy_doubled_weights(n_particles, loss_count):
    if n_particles % 4:
        raise DomainError(f"doubled TF state needs N divisible by 4, got {n_particles}")
    if not 0 <= loss_count < n_particles:
        raise DomainError(f"loss count K={loss_count} must satisfy 0 <= K < N = {n_particles}")
    q = n_particles // 4
    return four_mode_loss((q, q, q, q), loss_count)


def blockwise_qfi_matrix(weights):
    """2x2 QFI matrix of a four-mode Dicke mixture under (Jy1, Jy2).

    Within a block the state is diagonal and Jy1 only couples neighbouring b1
    at fixed b2, so F11 is a sum of tridiagonal spectral sums (and likewise
    F22).  No pair of occupation tuples is coupled by both Jy1 and Jy2, so
    the off-diagonal entries vanish identically.
    """
    f11 = f22 = 0.0
    for block in pair_blocks(weights):
        c1 = jy_couplings(block.m1)
        c2 = jy_couplings(block.m2)
        for col in block.weights.T:
            f11 += qfi_diagonal_tridiagonal(col, c1)
        for row in block.weights:
            f22 += qfi_diagonal_tridiagonal(row, c2)
    return np.array([[f11, 0.0], [0.0, f22]])


def lossy_doubled_qfi_matrix(n_particles, loss_count):
    return blockwise_qfi_matrix(lossy_doubled_weights(n_particles, loss_count))


def lossy_doubled_qfi11(n_particles, loss_count, symmetry_tol=1e-10):
    """(1,1) QFI-matrix element of the doubled TF state after ``loss_count`` losses."""
    f = lossy_doubled_qfi_matrix(n_particles, loss_count)
    if abs(f[0, 0] - f[1, 1]) > symmetry_tol * max(1.0, abs(f[0, 0])):
        raise AssertionError(f"1<->2 symmetry broken: F11={f[0, 0]!r}, F22={f[1, 1]!r}")
    return float(f[0, 0])


def lossy_tf_qfi(n_particles, loss_count):
    return qfi_mixed(lossy_twin_fock(n_particles, loss_count))


def pair_reduced_family(weights, pair=0):
    """Reduced state on one mode pair as a block-diagonal family.

    The pair particle number is random after loss; the reduced state is a
    direct sum over it of Dicke mixtures.  Returns (family, observables)
    with the pair's four local quadratic observables in the same direct sum.
    """
    marg = {}
    for t, p in weights.items():
        a, b = t[2 * pair], t[2 * pair + 1]
        marg[(a + b, b)] = marg.get((a + b, b), 0.0) + p
    sectors = sorted({m for m, _ in marg})
    offsets = np.cumsum([0] + [m + 1 for m in sectors])
    dim = int(offsets[-1])
    rho_diag = np.zeros(dim)
    for (m, b), p in marg.items():
        rho_diag[offsets[sectors.index(m)] + b] += p
    gen = np.zeros((dim, dim), dtype=complex)
    obs = [np.zeros((dim, dim), dtype=complex) for _ in range(4)]
    for k, m in enumerate(sectors):
        sl = slice(offsets[k], offsets[k + 1])
        gen[sl, sl] = build_spin_operators(m).jy
        for o, block in zip(obs, quadratic_observables(m)):
            o[sl, sl] = block
    family = ParametrizedFamily(np.diag(rho_diag).astype(complex), gen)
    return family, obs


def local_readout_snr11(n_particles, loss_count, theta1):
    """Generalized SNR of the pair-1 quadratic readouts for the lossy doubled TF.

    Only pair-1 observables are used, so the moment matrix has a single
    non-zero element M11, which lower-bounds the QFI element F11.
    """
    from .metrology import generalized_snr

    family, obs = pair_reduced_family(lossy_doubled_weights(n_particles, loss_count), pair=0)
    return generalized_snr(family, obs, theta1, names=("Jz1^2", "(J+1^2+h.c.)/2", "(Jz1J+1+h.c.)/2", "Jx1"))


# ---------------------------------------------------- gradiometry closed forms

def gradiometry_polynomials(n_particles):
    """t, g, h: the polynomials in x = N/4 entering the pair-1 covariance."""
    x = n_particles / 4
    t = x * (x + 1) / 2
    g = (3 * x ** 4 + 6 * x ** 3 + x ** 2 - 2 * x) / 8
    h = (x ** 4 + 2 * x ** 3 + 3 * x ** 2 + 2 * x) / 8
    return t, g, h


def gradiometry_covariance(n_particles, theta1):
    """Closed-form covariance of (Jz1^2, (J+1^2 + h.c.)/2) on the rotated doubled TF."""
    t, g, h = gradiometry_polynomials(n_particles)
    s2, c2 = math.sin(theta1) ** 2, math.cos(theta1) ** 2
    c11 = s2 ** 2 * g + t * c2 * s2 - t ** 2 * s2 ** 2
    c22 = (1 + c2 ** 2) * g + t * c2 * s2 - 2 * h * c2 - t ** 2 * s2 ** 2
    c12 = c2 * s2 * (g - t) - h * s2 + t ** 2 * s2 ** 2
    return np.array([[c11, c12], [c12, c22]])


def gradiometry_moment_matrix(n_particles, theta1, degenerate_tol=1e-12):
    """M11 for local (Jz1^2, (J+1^2 + h.c.)/2) readout of the doubled TF state.

    Uses the closed-form derivatives and covariance; the covariance of
    pair-1 and pair-2 observables vanishes, so only the upper 2x2 block
    matters.  At sin(2 theta1) = 0 the ratio is 0/0 and the constant limit
    N(N+4)/8 is returned with ``at_limit`` set.
    """
    if n_particles % 4:
        raise DomainError(f"doubled TF state needs N divisible by 4, got {n_particles}")
    x = n_particles / 4
    amp = n_particles / 8 * (x + 1)
    s = math.sin(2 * theta1)
    deriv = amp * s * np.array([[1.0, -1.0]])
    cov = gradiometry_covariance(n_particles, theta1)
    det = s ** 2 / 16 * x ** 2 * (x + 1) ** 2 * (x + 2) * (x - 1)
    total = x * (x + 2) * (x + 1) * (x - 1) / 2
    extra = {"determinant": det, "sum": total}
    if abs(s) <= degenerate_tol:
        value, at_limit = n_particles * (n_particles + 4) / 8, True
    else:
        # for a 2x2 block and d = a(1, -1): d C^-1 d^T = a^2 (C11 + C22 + 2 C12) / det C
        value, at_limit = amp ** 2 * s ** 2 * total / det, False
    return MomentMatrixResult(
        observables=("Jz1^2", "(J+1^2+h.c.)/2"),
        derivative=deriv,
        covariance=cov,
        snr=np.array([[value]]),
        at_limit=at_limit,
        extra=extra,
    )


def gradiometry_direct(n_particles, theta1, theta2=0.0):
    """Direct four-mode evaluation of the pair-1 moments on the doubled TF.

    Builds the local operators on the full four-mode basis, rotates the
    state by exp(-i theta1 Jy1 - i theta2 Jy2) and returns the pair-1
    derivative row, covariance and the pseudo-inverse M11 (small N only).
    """
    state = doubled_tf(n_particles)
    ops = local_generators(state.basis)
    jy1 = ops["Jy1"].toarray()
    jy2 = ops["Jy2"].toarray()
    v = rotation(jy2, theta2) @ state.amplitudes
    family = ParametrizedFamily(PureState(state.basis, v), jy1)
    obs = [ops["quad1"][0].toarray(), ops["quad1"][1].toarray()]
    _, d, cov = _moments(family, obs, theta1)
    mat, _, _ = snr_quadratic_form(d, cov)
    return d, cov, float(mat[0, 0])


def sequential_identity_check(n_particles, theta1, theta2, tol=1e-10):
    """Check that a pi-shifted second interferometer measures theta1 - theta2.

    exp(-i pi/2 Jx) exp(-i theta2 Jz) exp(i pi/2 Jx) exp(i pi/2 Jx)
    exp(-i theta1 Jz) exp(-i pi/2 Jx) == exp(-i (theta1 - theta2) Jy)
    in operator norm.
    """
    ops = build_spin_operators(SpinSector(n_particles))
    bs = rotation(ops.jx, np.pi / 2)
    bs_inv = rotation(ops.jx, -np.pi / 2)
    lhs = bs @ rotation(ops.jz, theta2) @ bs_inv @ bs_inv @ rotation(ops.jz, theta1) @ bs
    rhs = rotation(ops.jy, theta1 - theta2)
    return bool(np.linalg.norm(lhs - rhs, 2) <= tol)
