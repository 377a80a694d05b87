"""Interior-point solver for nonlinear semidefinite programs.

Minimizes a smooth objective subject to a matrix-valued smoothness
constraint X(x) >= 0 and certifies approximate second-order stationarity.
The inner solver combines scaled primal/dual gradient steps with negative
curvature steps on a log-det merit function; the outer loop drives the
barrier parameter to zero along an admissible schedule.
"""

from .benchmarks import (
    PsfConfig,
    PsfInstance,
    PsfProblem,
    ScalarProblem,
    analytic_scalar_problem,
    dumps_instance,
    generate_psf,
    load_instance,
    loads_instance,
    psf_as_nsdp,
    psf_box_lipschitz,
    psf_initial_point,
    save_instance,
    scalar_merit_minimum,
)
from .certificates import (
    FjScaled,
    KktResiduals,
    SigmaTerm,
    WsospReport,
    complementarity_gaps,
    fj_scaled_multipliers,
    grad_lagrangian,
    hess_lagrangian,
    kkt_residuals,
    sigma_term,
    wsosp_curvature_check,
)
from .errors import (
    ConstantsRequired,
    DomainViolation,
    GenerationFailed,
    InvalidInput,
    LineSearchStall,
    NcsdpError,
    NumericalFailure,
    PreconditionViolated,
)
from .inner import (
    Backtracking,
    FixedLipschitz,
    InnerResult,
    IpmParams,
    ScalingOps,
    Sigmas,
    SospCheck,
    StepRecord,
    check_eps_sosp,
    identity_scaling,
    run_inner,
    sigma_guarantees,
    update1_dual,
    update2_primal,
    update3_negcurv,
    validate_scaling,
)
from .linalg import Spectrum, SymMat, spectral_decompose
from .merit import (
    MeritParams,
    lambda_surrogate,
    local_lipschitz_Z,
    local_lipschitz_x,
    local_lipschitz_xx,
    merit_grad_Z,
    merit_grad_x,
    merit_hess_xx,
    merit_value,
)
from .outer import (
    OuterRecord,
    OuterResult,
    Schedule,
    TracedStep,
    default_schedule,
    run_outer,
)
from .primal import primal_params, primal_start, run_inner_primal, run_outer_primal
from .problem import Iterate, LipschitzConstants, NsdpProblem, adjoint_map, delta_X
from .runner import run_compare, run_solve, run_verify
from .verify import VerifyReport, run_verification

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # linear algebra
    "SymMat", "Spectrum", "spectral_decompose",
    # problems
    "NsdpProblem", "Iterate", "LipschitzConstants", "adjoint_map", "delta_X",
    # merit
    "MeritParams", "merit_value", "merit_grad_x", "merit_grad_Z",
    "merit_hess_xx", "lambda_surrogate", "local_lipschitz_x",
    "local_lipschitz_Z", "local_lipschitz_xx",
    # inner solver
    "IpmParams", "Backtracking", "FixedLipschitz", "ScalingOps",
    "identity_scaling", "validate_scaling", "StepRecord", "InnerResult",
    "SospCheck", "Sigmas", "sigma_guarantees", "check_eps_sosp", "run_inner",
    "update1_dual", "update2_primal", "update3_negcurv",
    # outer loop
    "Schedule", "default_schedule", "OuterRecord", "OuterResult",
    "TracedStep", "run_outer",
    # primal variant
    "primal_params", "primal_start", "run_inner_primal", "run_outer_primal",
    # certificates
    "KktResiduals", "FjScaled", "SigmaTerm", "WsospReport", "kkt_residuals",
    "grad_lagrangian", "hess_lagrangian", "fj_scaled_multipliers",
    "complementarity_gaps", "sigma_term", "wsosp_curvature_check",
    # benchmarks
    "PsfConfig", "PsfInstance", "PsfProblem", "ScalarProblem", "generate_psf",
    "psf_as_nsdp", "psf_initial_point", "psf_box_lipschitz",
    "analytic_scalar_problem", "scalar_merit_minimum", "save_instance",
    "load_instance", "dumps_instance", "loads_instance",
    # verification and orchestration
    "VerifyReport", "run_verification", "run_solve", "run_compare",
    "run_verify",
    # errors
    "NcsdpError", "InvalidInput", "DomainViolation", "NumericalFailure",
    "PreconditionViolated", "ConstantsRequired", "LineSearchStall",
    "GenerationFailed",
]
