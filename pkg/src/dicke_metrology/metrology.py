"""Estimation functionals for Mach-Zehnder phase estimation.

Quantum and classical Fisher information, method-of-moments errors and the
generalized signal-to-noise ratio (SNR) of a list of observables.  The phase
is imprinted as ``rho(theta) = U rho U^dagger`` with ``U = exp(-i theta G)``,
``G = Jy`` unless another generator is given.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.integrate import trapezoid

from .errors import ContractError, DomainError
from .spin_algebra import SpinSector, build_spin_operators, check_hermitian, ladder_elements, unitary_factor
from .states import DickeMixture, PureState, dicke_state, phase_diffused

SUPPORT_TOL = 1e-12
PINV_RCOND = 1e-10
FD_STEP = 1e-5
CFI_DROP = 1e-14
DERIVATIVE_ZERO_TOL = 1e-9
LIMIT_STEP = 1e-5
LIMIT_RCOND = 1e-13


class ParametrizedFamily:
    """A probe state together with the generator of the phase shift.

    The state is stored as a factor ``X`` with ``rho = X X^dagger`` (one column
    for a pure state, one column per supported Dicke index for a mixture), so
    expectation values and covariances never need the full density matrix.
    """

    def __init__(self, state, generator=None):
        self.state = state
        if isinstance(state, PureState):
            x0 = state.amplitudes[:, None]
            self.dim = state.basis.dim
            sector = state.basis
        elif isinstance(state, DickeMixture):
            support = np.flatnonzero(state.weights > 0)
            x0 = np.zeros((state.sector.dim, support.size), dtype=complex)
            x0[support, np.arange(support.size)] = np.sqrt(state.weights[support])
            self.dim = state.sector.dim
            sector = state.sector
        else:
            rho = check_hermitian(np.asarray(state, dtype=complex), tol=1e-10)
            evals, evecs = np.linalg.eigh(rho)
            keep = evals > SUPPORT_TOL
            x0 = evecs[:, keep] * np.sqrt(evals[keep])
            self.dim = rho.shape[0]
            sector = None
        if generator is None:
            if not isinstance(sector, SpinSector):
                raise DomainError("a generator is required for states outside a Dicke sector")
            generator = build_spin_operators(sector).jy
        self.generator = check_hermitian(np.asarray(generator, dtype=complex))
        if self.generator.shape[0] != self.dim:
            raise DomainError(f"generator dim {self.generator.shape[0]} does not match state dim {self.dim}")
        self.x0 = x0
        self._factor = unitary_factor(self.generator)

    def factor(self, theta):
        return self._factor.apply(theta, self.x0)

    def density(self, theta):
        x = self.factor(theta)
        return x @ x.conj().T

    def expect(self, observable, theta):
        x = self.factor(theta)
        return float(np.real(np.vdot(x, observable @ x)))


def _as_family(obj, generator=None):
    return obj if isinstance(obj, ParametrizedFamily) else ParametrizedFamily(obj, generator)


# ---------------------------------------------------------------- QFI

def qfi_pure(state, generator=None):
    """4 Var(G) in a pure state (G = Jy by default)."""
    v = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    if generator is None:
        generator = build_spin_operators(state.basis).jy
    gv = generator @ v
    mean = np.vdot(v, gv).real
    return 4.0 * float(np.linalg.norm(gv - mean * v) ** 2)


def qfi_diagonal_tridiagonal(weights, couplings, support_tol=SUPPORT_TOL):
    """QFI of a diagonal state under a generator with zero diagonal and
    superdiagonal moduli ``couplings`` (one entry per adjacent pair)."""
    w = np.asarray(weights, dtype=float)
    lo, hi = w[:-1], w[1:]
    s = lo + hi
    keep = s > support_tol
    terms = np.zeros_like(s)
    terms[keep] = (lo[keep] - hi[keep]) ** 2 / s[keep]
    return 4.0 * float(np.sum(terms * np.asarray(couplings) ** 2))


def jy_couplings(n_particles):
    """Moduli |<n|Jy|n+1>| for the spin-N/2 irrep."""
    return ladder_elements(n_particles) / 2


def qfi_spectral(eigenvalues, eigenvectors, generators, support_tol=SUPPORT_TOL):
    """QFI matrix from the spectral decomposition of a mixed state.

    F_ij = 2 sum_{a,b} (l_a - l_b)^2 / (l_a + l_b) Re(<a|G_i|b><b|G_j|a>),
    summed over pairs with l_a + l_b > support_tol.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    s = lam[:, None] + lam[None, :]
    keep = s > support_tol
    c = np.zeros_like(s)
    c[keep] = (lam[:, None] - lam[None, :])[keep] ** 2 / s[keep]
    v = np.asarray(eigenvectors)
    elems = [v.conj().T @ g @ v for g in generators]
    p = len(generators)
    out = np.zeros((p, p))
    for i in range(p):
        for j in range(i, p):
            out[i, j] = out[j, i] = 2.0 * float(np.sum(c * np.real(elems[i] * elems[j].T)))
    return out


def qfi_mixed(mixture, generator=None, support_tol=SUPPORT_TOL):
    """QFI of a mixed probe via the support-truncated spectral sum.

    For a :class:`DickeMixture` with the default Jy generator the Dicke vectors
    are the eigenvectors and only the tridiagonal Jy couplings contribute.
    A dense density matrix is accepted as well and diagonalized.
    """
    if isinstance(mixture, DickeMixture):
        w = mixture.weights
        if abs(w.sum() - 1) > 1e-12:
            raise DomainError("mixture weights are not normalized")
        if generator is None:
            return qfi_diagonal_tridiagonal(w, jy_couplings(mixture.sector.n_particles), support_tol)
        return float(qfi_spectral(w, np.eye(w.size), [generator], support_tol)[0, 0])
    rho = check_hermitian(np.asarray(mixture, dtype=complex), tol=1e-10)
    if abs(np.trace(rho).real - 1) > 1e-10:
        raise DomainError("density matrix does not have unit trace")
    if generator is None:
        raise DomainError("a generator is required for a bare density matrix")
    evals, evecs = np.linalg.eigh(rho)
    return float(qfi_spectral(evals, evecs, [generator], support_tol)[0, 0])


def _max_abs(mat):
    if sps.issparse(mat):
        return float(abs(mat).max()) if mat.nnz else 0.0
    return float(np.max(np.abs(mat))) if mat.size else 0.0


def qfi_matrix(state, generators, support_tol=SUPPORT_TOL, commute_tol=1e-10):
    """Multiparameter QFI matrix for ``exp(-i sum_k theta_k G_k)``.

    Pure states use F_ij = 4 Re Cov(G_i, G_j), which requires commuting
    generators; mixed states use the spectral formula.
    """
    generators = [g if sps.issparse(g) else np.asarray(g) for g in generators]
    if isinstance(state, PureState):
        for i, gi in enumerate(generators):
            for gj in generators[i + 1:]:
                if _max_abs(gi @ gj - gj @ gi) > commute_tol:
                    raise ContractError("pure-state QFI matrix needs pairwise commuting generators")
        v = state.amplitudes
        centred = []
        for g in generators:
            gv = g @ v
            centred.append(gv - np.vdot(v, gv) * v)
        p = len(generators)
        out = np.zeros((p, p))
        for i in range(p):
            for j in range(i, p):
                out[i, j] = out[j, i] = 4.0 * float(np.real(np.vdot(centred[i], centred[j])))
        return out
    if isinstance(state, DickeMixture):
        return qfi_spectral(state.weights, np.eye(state.sector.dim), generators, support_tol)
    rho = check_hermitian(np.asarray(state, dtype=complex), tol=1e-10)
    evals, evecs = np.linalg.eigh(rho)
    return qfi_spectral(evals, evecs, generators, support_tol)


# ------------------------------------------------------- classical Fisher

def _outcome_probabilities(family, measurement, theta):
    x = family.factor(theta)
    if isinstance(measurement, str):
        if measurement != "number":
            raise DomainError(f"unknown readout {measurement!r}")
        return np.sum(np.abs(x) ** 2, axis=1)
    amps = measurement.conj().T @ x
    return np.sum(np.abs(amps) ** 2, axis=1)


def classical_fisher(family, measurement, theta, step=FD_STEP, drop=CFI_DROP):
    """Classical Fisher information of a projective readout at ``theta``.

    ``measurement`` is either ``"number"`` (occupation readout in the Dicke
    basis) or a unitary matrix whose columns are the measurement vectors.
    dq/dtheta is a central difference with step ``step``.
    """
    family = _as_family(family)
    if not isinstance(measurement, str):
        measurement = np.asarray(measurement, dtype=complex)
        resid = np.max(np.abs(measurement @ measurement.conj().T - np.eye(family.dim)))
        if resid > 1e-10:
            raise DomainError(f"measurement vectors are not complete (residual {resid:.2e})")
    q = _outcome_probabilities(family, measurement, theta)
    dq = (_outcome_probabilities(family, measurement, theta + step)
          - _outcome_probabilities(family, measurement, theta - step)) / (2 * step)
    keep = q >= drop
    return float(np.sum(dq[keep] ** 2 / q[keep]))


# ------------------------------------------------------ method of moments

def _moments(family, observables, theta, return_centred=False):
    """Means, derivatives i<[G, O]> and Jordan-symmetrized covariance.

    The covariance is Re(C^* C^T) for the centred vectors C; with
    ``return_centred`` C is returned as a fourth item.
    """
    x = family.factor(theta)
    gx = family.generator @ x
    means, derivs, centred = [], [], []
    for obs in observables:
        ox = obs @ x
        mean = float(np.real(np.vdot(x, ox)))
        means.append(mean)
        derivs.append(-2.0 * float(np.imag(np.vdot(gx, ox))))
        centred.append((ox - mean * x).ravel())
    c = np.array(centred)
    cov = np.real(c.conj() @ c.T)
    cov = (cov + cov.T) / 2
    if return_centred:
        return np.array(means), np.array(derivs), cov, c
    return np.array(means), np.array(derivs), cov


def _snr_from_centred(derivative, centred, rcond=LIMIT_RCOND):
    """d Cov^-1 d from an SVD of the centred vectors.

    Cov = A^T A with A = [Re C^T; Im C^T], so the singular values of A are
    square roots of the covariance eigenvalues.  This keeps accuracy when
    the covariance is nonsingular but badly conditioned, as it is close to
    a removable singularity.
    """
    a = np.vstack([centred.real.T, centred.imag.T])
    _, sv, vt = np.linalg.svd(a, full_matrices=False)
    keep = sv > rcond * sv[0] if sv.size and sv[0] > 0 else np.zeros_like(sv, dtype=bool)
    proj = vt[keep] @ np.asarray(derivative, dtype=float)
    return float(np.sum((proj / sv[keep]) ** 2))


def _derivative_scale(family, observables):
    g = np.max(np.sum(np.abs(family.generator), axis=1))
    return max(2.0 * g * np.max(np.sum(np.abs(o), axis=1)) for o in observables)


def mom_error(family, observable, theta):
    """Var(A) / (d<A>/dtheta)^2 with the analytic derivative i<[G, A]>.

    Returns ``math.inf`` where the derivative vanishes.
    """
    family = _as_family(family)
    _, d, cov = _moments(family, [observable], theta)
    if abs(d[0]) <= DERIVATIVE_ZERO_TOL * _derivative_scale(family, [observable]):
        return math.inf
    return float(cov[0, 0] / d[0] ** 2)


def _richardson_limit(fn, theta, delta):
    """Two-sided limit of ``fn`` at ``theta``, O(delta^4) accurate; inf if ``fn`` blows up nearby."""
    values = [fn(theta + s * delta) for s in (1, -1, 2, -2)]
    if not all(math.isfinite(v) for v in values):
        return math.inf
    near = (values[0] + values[1]) / 2
    far = (values[2] + values[3]) / 2
    return (4 * near - far) / 3


def mom_error_limit(family, observable, theta, delta=LIMIT_STEP):
    """Method-of-moments error, replacing 0/0 points by their limit."""
    family = _as_family(family)
    value = mom_error(family, observable, theta)
    if math.isfinite(value):
        return value
    return float(_richardson_limit(lambda t: mom_error(family, observable, t), theta, delta))


def theorem1_closed_forms(n_particles, m):
    """Small-angle J_z^2 method-of-moments error for the Dicke probe with Jz = m.

    ``error_at_zero`` is the theta -> 0 limit Var(Jz^2) / (d<Jz^2>/dtheta)^2,
    ``ratio_to_qfi`` is its reciprocal divided by N^2/2 - 2m^2 + N.
    ``approx_ratio`` is the compact form (1 - 2m^2/E)^2 / (4m^2 + 1),
    E = N^2/4 - m^2 + N/2, which agrees with ``ratio_to_qfi`` only to
    leading order in 1/N for m != 0 (they differ by the 8m^2 term in the
    numerator sum).  ``asymptotic_ratio`` is 1 / (4m^2 + 1).
    """
    if n_particles % 2:
        raise DomainError(f"N must be even, got {n_particles}")
    if abs(m) > n_particles / 2:
        raise DomainError(f"|m| = {abs(m)} exceeds N/2")
    a = n_particles / 2
    e = a * a - m * m + a
    d = e - 2 * m * m
    numer = sum((1 + s * 2 * m) ** 2 * (a + s * m + 1) * (a - s * m) for s in (1, -1))
    qfi = n_particles ** 2 / 2 - 2 * m * m + n_particles
    if d == 0:
        error, ratio = math.inf, 0.0
    else:
        error = numer / (4 * d * d)
        ratio = 1.0 / (error * qfi) if error > 0 else math.inf
    return {
        "error_at_zero": error,
        "ratio_to_qfi": ratio,
        "approx_ratio": (1 - 2 * m * m / e) ** 2 / (4 * m * m + 1),
        "asymptotic_ratio": 1 / (4 * m * m + 1),
        "qfi": qfi,
    }


# --------------------------------------------------- generalized SNR

@dataclass(frozen=True)
class MomentMatrixResult:
    """Derivatives, covariance and the generalized SNR of a readout list.

    ``derivative`` has one row per parameter; ``snr`` is the matrix
    D Cov^+ D^T (1x1 for a single phase).
    """

    observables: tuple
    derivative: np.ndarray
    covariance: np.ndarray
    snr: np.ndarray
    at_limit: bool = False
    rank_deficient: bool = False
    outside_range: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def value(self):
        return float(self.snr[0, 0])


def snr_quadratic_form(derivative, covariance, rcond=PINV_RCOND):
    """D Cov^+ D^T with eigenvalues below rcond * max dropped.

    Returns (matrix, rank_deficient, outside_range).
    """
    derivative = np.atleast_2d(np.asarray(derivative, dtype=float))
    evals, evecs = np.linalg.eigh(covariance)
    top = evals.max() if evals.size else 0.0
    keep = evals > rcond * top if top > 0 else np.zeros_like(evals, dtype=bool)
    proj = derivative @ evecs
    kept = proj[:, keep]
    mat = (kept / evals[keep]) @ kept.T
    dropped = proj[:, ~keep]
    norm_d = np.linalg.norm(derivative)
    outside = bool(norm_d > 0 and np.linalg.norm(dropped) > 1e-8 * norm_d)
    return mat, bool(not keep.all()), outside


def _names(observables, names):
    if names is not None:
        return tuple(names)
    return tuple(f"O{i + 1}" for i in range(len(observables)))


def generalized_snr(family, observables, theta, names=None, limit=True, delta=LIMIT_STEP):
    """Generalized SNR d<O> Cov^-1 d<O>^T of a list of observables.

    Where the covariance is singular (for a good readout list this happens
    only at isolated angles, together with vanishing derivatives) the ratio
    has a removable singularity.  With ``limit=True`` the two-sided
    Richardson limit from ``theta +- delta`` is returned there and
    ``at_limit`` is set; otherwise the pseudo-inverse value is returned, or
    zero if every derivative vanishes.
    """
    family = _as_family(family)
    observables = [np.asarray(o) for o in observables]
    _, d, cov = _moments(family, observables, theta)
    mat, deficient, outside = snr_quadratic_form(d, cov)
    at_limit = False
    vanishing = np.linalg.norm(d) <= DERIVATIVE_ZERO_TOL * _derivative_scale(family, observables)
    if vanishing or deficient:
        if limit:
            def snr_at(t):
                _, dt, _, centred = _moments(family, observables, t, return_centred=True)
                return _snr_from_centred(dt, centred)
            mat = np.array([[_richardson_limit(snr_at, theta, delta)]])
            at_limit = True
        elif vanishing:
            mat = np.zeros((1, 1))
    return MomentMatrixResult(
        observables=_names(observables, names),
        derivative=d[None, :],
        covariance=cov,
        snr=mat,
        at_limit=at_limit,
        rank_deficient=deficient,
        outside_range=outside,
    )


# ------------------------------------------------ phase diffusion

def bayes_posterior(n_particles, chi, theta_true, theta_grid, prior=None):
    """One-shot posterior over ``theta_grid`` for the phase-diffused probe.

    Likelihood L(theta) = |<ref| exp(-i (theta - theta_true) Jy) |psi(chi)>|^2
    with ref = exp(-i pi/2 Jy)|N/2, N/2>.  ``prior`` is None (uniform), an
    array on the grid, or a callable.  Normalized by the trapezoid rule.
    """
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("theta grid is empty")
    sector = SpinSector(n_particles)
    ref = phase_diffused(sector, 0.0).amplitudes
    probe = phase_diffused(sector, chi).amplitudes
    factor = unitary_factor(build_spin_operators(sector).jy)
    # <ref|V diag(e^{-i phi lambda}) V^dagger|probe>
    left = factor.eigenvectors.conj().T @ ref
    right = factor.eigenvectors.conj().T @ probe
    phases = np.exp(-1j * np.outer(grid - theta_true, factor.eigenvalues))
    like = np.abs(phases @ (left.conj() * right)) ** 2
    if prior is None:
        pri = np.ones_like(grid)
    elif callable(prior):
        pri = np.asarray([prior(t) for t in grid], dtype=float)
    else:
        pri = np.asarray(prior, dtype=float)
    post = pri * like
    if grid.size == 1:
        return np.ones(1)
    norm = trapezoid(post, grid)
    if norm <= 0:
        raise DomainError("posterior has zero mass on the grid")
    return post / norm


def qfi_vs_chi(n_particles, chi_grid):
    """QFI (Jy generator) of the phase-diffused probe for each chi."""
    sector = SpinSector(n_particles)
    return np.array([qfi_pure(phase_diffused(sector, chi)) for chi in chi_grid])


def dicke_qfi(n_particles, m):
    """N^2/2 - 2 m^2 + N."""
    return n_particles ** 2 / 2 - 2 * m * m + n_particles


def dicke_family(n_particles, m=0):
    return ParametrizedFamily(dicke_state(SpinSector(n_particles), m))
