"""Spin-N/2 operators on the symmetric two-mode (Dicke) basis.

Basis convention used everywhere in the package: index ``n`` is the
occupation of mode ``b``, so ``|N - n, n>`` has ``Jz = N/2 - n``.
"""

import hashlib
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SpinSector:
    """Fixed total particle number ``n_particles`` and its Dicke basis."""

    n_particles: int
    dim: int = field(init=False)
    spin_j: Fraction = field(init=False)

    def __post_init__(self):
        n = int(self.n_particles)
        if n != self.n_particles or n < 0:
            raise DomainError(f"particle number must be a non-negative integer, got {self.n_particles}")
        object.__setattr__(self, "n_particles", n)
        object.__setattr__(self, "dim", n + 1)
        object.__setattr__(self, "spin_j", Fraction(n, 2))

    def jz_diagonal(self):
        return self.n_particles / 2 - np.arange(self.dim, dtype=float)


def _as_sector(sector):
    return sector if isinstance(sector, SpinSector) else SpinSector(sector)


def check_hermitian(matrix, tol=HERMITIAN_TOL):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
    err = np.max(np.abs(matrix - matrix.conj().T)) if matrix.size else 0.0
    if err > tol:
        raise DomainError(f"matrix is not Hermitian (max deviation {err:.3e})")
    return matrix


@dataclass(frozen=True)
class SpinOperators:
    sector: SpinSector
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray


def ladder_elements(n_particles):
    """Superdiagonal of J+: ``<n|J+|n+1> = sqrt(j(j+1) - m(m+1))``, m = j - n - 1."""
    j = n_particles / 2
    m = j - np.arange(1, n_particles + 1, dtype=float)
    return np.sqrt((j - m) * (j + m + 1))


@lru_cache(maxsize=64)
def _spin_operators(n_particles):
    sector = SpinSector(n_particles)
    jplus = np.diag(ladder_elements(n_particles), k=1).astype(complex)
    jminus = jplus.conj().T
    ops = SpinOperators(
        sector=sector,
        jx=(jplus + jminus) / 2,
        jy=(jplus - jminus) / 2j,
        jz=np.diag(sector.jz_diagonal()).astype(complex),
        jplus=jplus,
        jminus=jminus,
    )
    for arr in (ops.jx, ops.jy, ops.jz, ops.jplus, ops.jminus):
        arr.setflags(write=False)
    return ops


def build_spin_operators(sector):
    """Jx, Jy, Jz, J+ and J- for the spin-N/2 irrep (read-only arrays)."""
    return _spin_operators(_as_sector(sector).n_particles)


class UnitaryFactor:
    """Eigendecomposition of a Hermitian generator, reused for every angle."""

    def __init__(self, generator, tol=1e-10):
        generator = check_hermitian(np.asarray(generator, dtype=complex))
        evals, evecs = np.linalg.eigh(generator)
        scale = max(1.0, float(np.max(np.abs(generator))) if generator.size else 1.0)
        residual = float(np.max(np.abs((evecs * evals) @ evecs.conj().T - generator))) if generator.size else 0.0
        if residual > tol * scale:
            raise NumericalError(f"eigendecomposition residual {residual:.3e} above tolerance", residual)
        self.eigenvalues = evals
        self.eigenvectors = evecs
        self.residual = residual
        evals.setflags(write=False)
        evecs.setflags(write=False)

    def unitary(self, angle):
        """Return exp(-i * angle * G)."""
        phases = np.exp(-1j * angle * self.eigenvalues)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T

    def apply(self, angle, vectors):
        v = self.eigenvectors
        phases = np.exp(-1j * angle * self.eigenvalues)
        vectors = np.asarray(vectors)
        coeff = v.conj().T @ vectors
        if coeff.ndim == 1:
            return v @ (phases * coeff)
        return v @ (phases[:, None] * coeff)


_factor_cache = {}
_factor_lock = threading.Lock()
_FACTOR_CACHE_SIZE = 128


def unitary_factor(generator):
    """Cached :class:`UnitaryFactor` keyed on the generator's contents."""
    generator = np.ascontiguousarray(generator, dtype=complex)
    key = (generator.shape, hashlib.sha1(generator.tobytes()).hexdigest())
    with _factor_lock:
        factor = _factor_cache.get(key)
        if factor is None:
            factor = UnitaryFactor(generator)
            if len(_factor_cache) >= _FACTOR_CACHE_SIZE:
                _factor_cache.pop(next(iter(_factor_cache)))
            _factor_cache[key] = factor
    return factor


def rotation(generator, angle):
    """exp(-i * angle * generator) from a cached eigendecomposition."""
    return unitary_factor(generator).unitary(angle)


def parity_operator(sector):
    """Single-mode parity (-1)^(b^dagger b), diagonal in the Dicke basis."""
    sector = _as_sector(sector)
    signs = np.where(np.arange(sector.dim) % 2 == 0, 1.0, -1.0)
    return np.diag(signs).astype(complex)


QUADRATIC_OBSERVABLE_NAMES = ("Jz^2", "(J+^2+h.c.)/2", "(JzJ+ + h.c.)/2", "Jx")


def quadratic_observables(sector):
    """Ordered list [Jz^2, (J+^2 + h.c.)/2, (Jz J+ + h.c.)/2, Jx]."""
    ops = build_spin_operators(sector)
    jz2 = ops.jz @ ops.jz
    jp2 = ops.jplus @ ops.jplus
    jzjp = ops.jz @ ops.jplus
    return [
        jz2,
        (jp2 + jp2.conj().T) / 2,
        (jzjp + jzjp.conj().T) / 2,
        ops.jx.copy(),
    ]


def cyclic_shift(sector):
    """C|N-n, n> = |N-n-1, n+1>, with index N wrapping to 0."""
    sector = _as_sector(sector)
    return np.roll(np.eye(sector.dim), 1, axis=0).astype(complex)


def phase_basis(sector):
    """Jy phase basis as the columns of a unitary matrix.

    Column k is (N+1)^(-1/2) sum_n exp(2 pi i n k / (N+1)) exp(i pi/2 Jx) |N-n, n>.
    """
    sector = _as_sector(sector)
    d = sector.dim
    n = np.arange(d)
    fourier = np.exp(2j * np.pi * np.outer(n, n) / d) / np.sqrt(d)
    turn = rotation(build_spin_operators(sector).jx, -np.pi / 2)
    return turn @ fourier
