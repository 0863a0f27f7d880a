"""stressbed: a volatility stress-testbed for online learners.

Generates nonstationary and adversarial loss sequences with a controllable
stress knob, runs a roster of online learners against them, measures dynamic
regret against block-constant worst-case comparators, and certifies whether
a learner's regret responds to volatility with a strictly concave,
identity-dominated, horizon-sublinear curve.
"""

__version__ = "0.1.0"

from .errors import (
    InvalidInputError,
    InvalidSpecError,
    RunAbortedError,
    StressbedError,
    UnsupportedOracleError,
)
from .geometry import (
    ActionSpace,
    Ball,
    Box,
    Simplex,
    block_argmin,
    grid_oracle_argmin,
    make_space,
    project,
)
from .losses import LinearLoss, QuadraticLoss
from .records import ComparatorSequence, EnvironmentTrace, RunRecord
from .envs import EnvSpec, FAMILIES, generate, trace_from_json, trace_to_json
from .learners import (
    Feedback,
    LEARNERS,
    Learner,
    hedge_step,
    make_learner,
    ogd_step,
    run_learner,
)
from .metrics import (
    VariabilityReport,
    best_comparator_in_UK,
    dynamic_regret,
    path_length,
    static_regret,
    temporal_variability,
    variability_report,
)
from .certify import (
    CertificationResult,
    ResponseCurve,
    SublinearityResult,
    SweepResult,
    certify_order,
    concave_monotone_fit,
    fit_response,
    sublinearity_test,
    volatility_sweep,
)
from .seeding import child_seed, rng_for

__all__ = [
    "__version__",
    "ActionSpace",
    "Ball",
    "Box",
    "Simplex",
    "CertificationResult",
    "ComparatorSequence",
    "EnvSpec",
    "EnvironmentTrace",
    "FAMILIES",
    "Feedback",
    "InvalidInputError",
    "InvalidSpecError",
    "LEARNERS",
    "Learner",
    "LinearLoss",
    "QuadraticLoss",
    "ResponseCurve",
    "RunAbortedError",
    "RunRecord",
    "StressbedError",
    "SublinearityResult",
    "SweepResult",
    "UnsupportedOracleError",
    "VariabilityReport",
    "best_comparator_in_UK",
    "block_argmin",
    "certify_order",
    "child_seed",
    "concave_monotone_fit",
    "dynamic_regret",
    "fit_response",
    "generate",
    "grid_oracle_argmin",
    "hedge_step",
    "make_learner",
    "make_space",
    "ogd_step",
    "path_length",
    "project",
    "rng_for",
    "run_learner",
    "static_regret",
    "sublinearity_test",
    "temporal_variability",
    "trace_from_json",
    "trace_to_json",
    "variability_report",
    "volatility_sweep",
]
