"""Forward and inverse spectral theory of finite Jacobi matrices under
rank-one boundary perturbations."""

from .core import (
    BoundaryConstant,
    DegenerateSpectrumError,
    ExtraDatum,
    IllConditionedMeasureError,
    InconsistentDataError,
    InterlacingReport,
    JacobiMatrix,
    NormalizationError,
    NotHerglotzError,
    PoleEvaluationError,
    RecoveryProblem,
    SpectralDatum,
    SpectralError,
    StructuralError,
    TwoSpectra,
    compute_delta,
    compute_tau,
    validate_interlacing,
)
from .forward import (
    asymptotic_check,
    boundary_from_angle,
    build_F,
    generate_instance,
    m_function,
    m_shift,
    residue_weight_check,
)
from .herglotz import (
    PartialFractionForm,
    ProductForm,
    constant_from_zero,
    eval_partial_fraction,
    eval_product,
    product_residues,
    product_to_partial_fraction,
    zeros_of_partial_fraction,
)
from .inverse import (
    RecoveryResult,
    check_two_spectra,
    reconstruct_from_two_spectra,
    recover,
    recover_ip1,
    recover_ip2,
    recover_ip3,
    recover_nonmatching,
    weights_from_two_spectra,
)
from .tridiag import apply_boundary, eigenvalues, spectral_datum, spectral_weights

__version__ = "0.1.0"
