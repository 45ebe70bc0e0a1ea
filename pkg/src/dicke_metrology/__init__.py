"""Phase estimation with twin-Fock and Dicke probes in Mach-Zehnder interferometers."""

from .errors import ContractError, DomainError, NumericalError
from .loss import apply_loss, four_mode_loss, lossy_twin_fock
from .metrology import (
    ParametrizedFamily,
    classical_fisher,
    generalized_snr,
    mom_error,
    mom_error_limit,
    qfi_matrix,
    qfi_mixed,
    qfi_pure,
    theorem1_closed_forms,
)
from .spin_algebra import SpinSector, build_spin_operators, rotation
from .states import DickeMixture, PureState, dicke_state, phase_diffused, twin_fock

__all__ = [
    "ContractError",
    "DickeMixture",
    "DomainError",
    "NumericalError",
    "ParametrizedFamily",
    "PureState",
    "SpinSector",
    "apply_loss",
    "build_spin_operators",
    "classical_fisher",
    "dicke_state",
    "four_mode_loss",
    "generalized_snr",
    "lossy_twin_fock",
    "mom_error",
    "mom_error_limit",
    "phase_diffused",
    "qfi_matrix",
    "qfi_mixed",
    "qfi_pure",
    "rotation",
    "theorem1_closed_forms",
    "twin_fock",
]
