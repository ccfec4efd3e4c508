"""entirefit: simultaneous polynomial approximation of a function and its
first m derivatives on a window of the real line, with a pointwise error
envelope that may shrink toward the window edges."""

from .expr import (
    BinOp, Call, Const, DifferentiationError, DomainError, Expr, Neg, ParseError,
    Pow, Var, contains_abs, differentiate, eval_grid, evaluate, expr_from_coeffs,
    parse, to_string,
)
from .poly import Polynomial, linear_combine
from .functionals import (
    Functional, Moment, PointEval, QuadratureError, apply_to_function,
    apply_to_poly, moment_fast_path, quadrature,
)
from .fitting import (
    ConstraintSystem, InfeasibleBudgetError, RankDeficientError, SamplePoint,
    SampleSet, certify_region_errors, certify_sup_error, constraint_residual_max,
    disk_interior_points, fit_constrained, interval_sample_set, make_sample_set,
    sample_set_for,
)
from .stages import (
    EpsilonProfile, GlueDiscontinuityError, NonPositiveEnvelopeError, Stage,
    StageConsistencyError, glue, radialize, run_stages, shift_epsilon,
)
from .pipeline import (
    ApproximationSpec, Artifact, Certificate, CertificationFailure, CompactWindow,
    OrderReport, PipelineError, approximate, approximate_compact, certify,
    taylor_shift,
)
from .jsonio import artifact_to_obj, dumps, read_artifact, write_artifact

__version__ = "0.1.0"
