"""Variational solver for discrete Emden-Fowler boundary value problems."""
from .dependence import (
    AffineHomotopy,
    Certification,
    ExplicitSequence,
    StudyRecord,
    StudyReport,
    certify_limit,
    extract_convergent_subsequence,
    run_study,
)
from .errors import (
    ConstructionError,
    ConvergenceError,
    EvaluationError,
    NumericError,
    OracleSizeError,
)
from .functional import (
    ActionContext,
    CoercivityEvidence,
    GrowthProbeGrid,
    GrowthVerdict,
    Orientation,
    action_gradient,
    action_value,
    coercivity_probe,
    equation_residual,
    gateaux_bound_probe,
    growth_verdict,
    holder_constant,
    make_context,
)
from .model import (
    Coefficients,
    Custom,
    Grid,
    GrowthDeclaration,
    Mixed,
    Parameter,
    Periodic,
    PowerModulated,
    ProblemInstance,
    boundary_extend,
    evaluate_F,
    evaluate_f,
    power_family,
    validate_problem,
    zero_family,
)
from .operators import (
    QuadraticOperator,
    SpectralReport,
    build_mixed_operator,
    build_operator,
    build_periodic_operator,
    linear_residual,
    spectral_report,
)
from .solver import (
    SolveConfig,
    SolveReport,
    VuCertificate,
    brute_force_oracle,
    minimize_action,
    verify_membership,
)

__version__ = "0.1.0"
