"""Certified lower bounds on the spectral gap of nonsymmetric elliptic operators.

The pipeline couples a discretized operator L = Laplacian - B.grad - c on a
convex domain to an associated one-dimensional tent-potential eigenproblem
w'' + sigma|s| w = -mu w whose gap, scaled by a squared shift factor,
bounds the operator's gap Re(lambda) - lambda0 from below.
"""

from .certificate import GapCertificate, SoundnessReport, certify, soundness_report
from .domain import DomainSpec, build_grid, disk, ellipse, interval, rectangle, square
from .elliptic_spectrum import (
    DiscreteOperator,
    DiscreteSpectrum,
    assemble,
    low_spectrum,
    principal_eigenpair,
)
from .errors import (
    DegenerateProfile,
    GapUndefined,
    GapcertError,
    GridTooCoarse,
    HypothesisViolation,
    InvalidProblem,
    InvariantViolation,
    MissingConjugate,
    MissingEigenfunction,
    MultipleTurningPoints,
    NonConvergence,
    NonPositiveEigenfunction,
    NonPositiveManufacturedSolution,
    SignInconsistency,
    UnknownExperiment,
)
from .modulus import (
    ContinuityModulus,
    ModulusProfile,
    RiccatiProfile,
    Sigma2Search,
    build_continuity_modulus,
    build_modulus,
    build_riccati,
    convex_modulus,
    find_sigma2,
    find_turning_point,
)
from .operator_model import (
    DerivedFields,
    OperatorSpec,
    SampledField,
    TauProfile,
    check_C_nonnegative,
    check_laplacian_identity,
    compute_derived_fields,
    estimate_K,
    estimate_Lambda,
    estimate_kappa,
    estimate_tau,
    fold_Lambda,
    manufacture_operator,
)
from .sl_solver import (
    SLEigenpair,
    SLProblem,
    SLSpectrum,
    check_lagrange_monotonicity,
    critical_sigma,
    ode_residual_inf,
    sl_gap,
    solve_sl,
)

__version__ = "0.1.0"
