"""Penalty-based iteratively reweighted alternating minimization.

A numpy/scipy library for linearly constrained nonconvex composite problems
of the form  min f(x) + sum_i h(g(y_i))  s.t.  A x + B y = c, solved through
a quadratic penalty with geometric continuation, plus a complete TV-q image
deblurring application, a reweighted ADMM baseline, runtime descent
diagnostics and independent verification oracles.
"""

from .core import (
    DESCENT_TOL_FACTOR,
    FAIL,
    NOT_APPLICABLE,
    PASS,
    WEIGHT_SMOOTHING,
    IterationRecord,
    PenaltyConfig,
    ProblemInterface,
    Solution,
    compute_weights,
    continuation_step,
    descent_diagnostic,
    feasibility_residual,
    original_objective,
    penalty_objective,
    power_weight_rule,
    run,
    soft_threshold,
    stabilization_index,
    subgradient_gap,
    theory_report,
    y_update,
)
from .deblur import (
    AdmmConfig,
    DeblurSpec,
    ExperimentResult,
    admm_baseline_run,
    build_problem,
    degrade,
    feasibility_bound,
    penalty_for_accuracy,
    residual_bounds,
    run_experiment,
    smooth_random_field,
    snr,
    synthetic_scene,
)
from .errors import (
    NumericBreakdownError,
    OracleFailureError,
    PgmFormatError,
    SingularSystemError,
    UnsupportedStructureError,
)
from .imageops import (
    Kernel,
    SpectralOperator,
    as_image,
    circular_convolve,
    gaussian_kernel,
    nullspace_check,
    spectral_solve,
    strong_convexity_modulus,
    tv_adjoint,
    tv_forward,
)

__version__ = "0.1.0"
