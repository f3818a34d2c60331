"""Heat-bath Markov chains: construction, spectral certificates and
stochastic-idempotent canonical forms, with exact rational arithmetic."""

from ._backend import BACKEND
from .heatbath import (
    HeatBathSpec,
    InvalidSpecError,
    Label,
    LabelKernel,
    ValidationReport,
    build_chain,
    build_label_kernel,
    load_spec,
    reconstruct_spec,
    validate_spec,
)
from .matrixcore import (
    RationalMatrix,
    StateSpace,
    StochasticMatrix,
    TargetDistribution,
    check_reversible,
    check_stochastic,
    communicating_structure,
    is_idempotent,
    lazify,
    zero_columns,
)
from .spectral import SpectralReport, certify_psd, eigenvalues_symmetric, mixing_time_bound, symmetrize
from .sicanon import (
    reversible_settles_implies_idempotent,
    reversible_si_equivalence,
    settle_analysis,
    si_classify,
    si_decompose,
)
from .transfer import adjoint, compose_transfer, verify_transfer_conditions

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HeatBathSpec",
    "InvalidSpecError",
    "Label",
    "LabelKernel",
    "RationalMatrix",
    "SpectralReport",
    "StateSpace",
    "StochasticMatrix",
    "TargetDistribution",
    "ValidationReport",
    "adjoint",
    "build_chain",
    "build_label_kernel",
    "certify_psd",
    "check_reversible",
    "check_stochastic",
    "communicating_structure",
    "compose_transfer",
    "eigenvalues_symmetric",
    "is_idempotent",
    "lazify",
    "load_spec",
    "mixing_time_bound",
    "reconstruct_spec",
    "reversible_settles_implies_idempotent",
    "reversible_si_equivalence",
    "settle_analysis",
    "si_classify",
    "si_decompose",
    "symmetrize",
    "validate_spec",
    "verify_transfer_conditions",
    "zero_columns",
]
