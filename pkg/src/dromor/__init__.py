"""Distributionally robust model order reduction for discrete-time LTI
systems with stochastic inputs.

The public surface re-exports the system/problem containers, the ambiguity
set machinery, the reduction pipeline, the balanced-truncation baseline and
the validation tools.  The conic-program builder lives in :mod:`dromor.sdp`
and is importable directly for solver triage.
"""

from .ambiguity import (
    GaussianSpec,
    GelbrichBall,
    MembershipResult,
    WorstCaseResult,
    gelbrich_distance,
    membership,
    sample_in_ball,
    wasserstein2_gaussian,
    worst_case_trace,
)
from .baselines import balanced_truncation, balancing_transform, gramians
from .errors import (
    ConvergenceError,
    DimensionError,
    DromorError,
    InfeasibleError,
    InstabilityError,
    NotPsdError,
    NotSymmetricError,
    RankDeficiencyError,
    SolverFailure,
    UnobservableError,
)
from .reduction import (
    AmbiguousReductionProblem,
    Certificate,
    DiscreteLtiSystem,
    ReducedModel,
    build_psi,
    recover_reduced,
    reduce_certain,
    reduce_robust,
    solve_dromor_sdp,
    to_observable_canonical,
)
from .validation import (
    AugmentedSystem,
    CertificateReport,
    SimulationStats,
    asymptotic_error_exact,
    check_certificate,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousReductionProblem",
    "AugmentedSystem",
    "Certificate",
    "CertificateReport",
    "ConvergenceError",
    "DimensionError",
    "DiscreteLtiSystem",
    "DromorError",
    "GaussianSpec",
    "GelbrichBall",
    "InfeasibleError",
    "InstabilityError",
    "MembershipResult",
    "NotPsdError",
    "NotSymmetricError",
    "RankDeficiencyError",
    "ReducedModel",
    "SimulationStats",
    "SolverFailure",
    "UnobservableError",
    "WorstCaseResult",
    "asymptotic_error_exact",
    "balanced_truncation",
    "balancing_transform",
    "build_psi",
    "check_certificate",
    "gelbrich_distance",
    "gramians",
    "membership",
    "recover_reduced",
    "reduce_certain",
    "reduce_robust",
    "sample_in_ball",
    "simulate",
    "solve_dromor_sdp",
    "to_observable_canonical",
    "wasserstein2_gaussian",
    "worst_case_trace",
]
