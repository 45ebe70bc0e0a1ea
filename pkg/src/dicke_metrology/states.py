"""Probe states: Dicke / twin-Fock, one-axis twisted, phase diffused."""

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError
from .spin_algebra import SpinSector, _as_sector, build_spin_operators, rotation

NORM_TOL = 1e-12


@dataclass(frozen=True)
class PureState:
    """Unit vector in a Dicke basis (``SpinSector``) or a four-mode basis."""

    basis: object
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.shape[0] != self.basis.dim:
            raise DomainError(f"amplitude vector of shape {amps.shape} does not match basis dim {self.basis.dim}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise DomainError(f"state is not normalized (norm {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def overlap(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op):
        v = self.amplitudes
        return complex(np.vdot(v, op @ v))


@dataclass(frozen=True)
class DickeMixture:
    """Diagonal mixed state sum_n w_n |N-n, n><N-n, n|."""

    sector: SpinSector
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.sector.dim,):
            raise DomainError(f"weights of shape {w.shape} do not match sector dim {self.sector.dim}")
        if np.any(w < 0):
            raise DomainError("mixture weights must be non-negative")
        total = w.sum()
        if abs(total - 1) > NORM_TOL:
            raise DomainError(f"mixture weights sum to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, sector, index):
        sector = _as_sector(sector)
        w = np.zeros(sector.dim)
        w[index] = 1.0
        return cls(sector, w)

    def density_matrix(self):
        return np.diag(self.weights).astype(complex)


def imbalance_to_index(sector, m):
    sector = _as_sector(sector)
    n = sector.n_particles / 2 - m
    if abs(n - round(n)) > 1e-12:
        raise DomainError(f"N/2 - m must be an integer (N={sector.n_particles}, m={m})")
    n = int(round(n))
    if not 0 <= n <= sector.n_particles:
        raise DomainError(f"imbalance |m| = {abs(m)} exceeds N/2 = {sector.n_particles / 2}")
    return n


def dicke_state(sector, m=0):
    """|N/2 + m, N/2 - m>: the Jz eigenvector with eigenvalue m."""
    sector = _as_sector(sector)
    amps = np.zeros(sector.dim, dtype=complex)
    amps[imbalance_to_index(sector, m)] = 1.0
    return PureState(sector, amps)


def twin_fock(n_particles):
    if n_particles % 2:
        raise DomainError(f"twin-Fock state needs even N, got {n_particles}")
    return dicke_state(SpinSector(n_particles), 0)


def coherent_x_state(sector):
    """|+>^N: binomial amplitudes sqrt(C(N, n)) / 2^(N/2)."""
    sector = _as_sector(sector)
    n = sector.n_particles
    amps = np.sqrt([comb(n, k) for k in range(n + 1)], dtype=float) / 2 ** (n / 2)
    return PureState(sector, amps / np.linalg.norm(amps))


def oat_state(sector, t):
    """One-axis twisted state exp(-i t Jz^2)|+>^N."""
    sector = _as_sector(sector)
    base = coherent_x_state(sector).amplitudes
    phases = np.exp(-1j * t * sector.jz_diagonal() ** 2)
    return PureState(sector, phases * base)


def phase_diffused(sector, chi):
    """exp(-i chi Jz^2) exp(-i pi/2 Jy) |N/2, N/2>."""
    sector = _as_sector(sector)
    if sector.n_particles % 2:
        raise DomainError(f"phase-diffused probe needs even N, got {sector.n_particles}")
    tf = dicke_state(sector, 0).amplitudes
    split = rotation(build_spin_operators(sector).jy, np.pi / 2) @ tf
    phases = np.exp(-1j * chi * sector.jz_diagonal() ** 2)
    v = phases * split
    return PureState(sector, v / np.linalg.norm(v))
