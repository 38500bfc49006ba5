"""First-order methods for objectives with Hoelder-continuous gradients.

Two solvers: a scaled gradient method whose step uses a known smoothness
level and exponent, and an adaptive variant that estimates its own local
smoothness and needs no problem constants. Around them: sampled estimators
and checkers for smoothness / strong convexity / KL inequalities, the rate
and complexity constants the theory predicts, trace-vs-bound verification,
and a batch experiment harness with a CLI.
"""

from .adasga import (
    BB1,
    BB2,
    OMEGA_MAX,
    AdaConfig,
    ConstantGamma,
    adasga_alpha,
    gamma_bb,
    local_lipschitz,
    lyapunov_el,
    lyapunov_hat,
    lyapunov_hat_from_trace,
    run_adasga,
)
from .errors import (
    ClaimError,
    ConfigError,
    DomainViolationError,
    EstimationError,
    HoldergradError,
    NumericFailureError,
)
from .harness import (
    ExperimentConfig,
    build_problem,
    build_solver,
    emit_plot,
    read_trace_csv,
    run_experiment,
    suite,
    write_trace_csv,
)
from .problems import (
    GroundTruth,
    Objective,
    Region,
    builtin_problems,
    finite_diff_gradient,
    make_log_sum_exp,
    make_poisson,
    make_power_norm,
    make_quadratic,
)
from .rates import (
    RateConstants,
    RateReport,
    RecursionClass,
    adasga_complexity,
    adasga_qhat,
    adasga_strong_constants,
    classify_recursion,
    feasible_claims,
    fit_linear_rate,
    kl_rate_q2,
    kl_step_upper,
    mn_bound,
    sga_grad_complexity,
    sga_strong_constants,
    verify_bounds,
)
from .sampling import env_seed_override, rng_from_seed, sample_ball
from .sga import (
    Constant,
    Diminishing,
    IntervalConstant,
    SgaConfig,
    StepMode,
    StopRule,
    alpha_cap,
    default_alpha,
    run_sga,
    sga_step,
)
from .smoothness import (
    HolderEstimate,
    KLEstimate,
    StrongConvexityEstimate,
    ViolationReport,
    characterization_modulus,
    check_holder_inequalities,
    check_smooth_characterizations,
    check_strong_smooth_bound,
    estimate_holder_modulus,
    estimate_kl,
    estimate_strong_convexity,
    lemma_compatible_mu,
    sample_pair_set,
)
from .trace import RunStatus, Trace

__version__ = "0.1.0"

__all__ = [
    "AdaConfig",
    "BB1",
    "BB2",
    "ClaimError",
    "ConfigError",
    "Constant",
    "ConstantGamma",
    "Diminishing",
    "DomainViolationError",
    "EstimationError",
    "ExperimentConfig",
    "GroundTruth",
    "HolderEstimate",
    "HoldergradError",
    "IntervalConstant",
    "KLEstimate",
    "NumericFailureError",
    "OMEGA_MAX",
    "Objective",
    "RateConstants",
    "RateReport",
    "RecursionClass",
    "Region",
    "RunStatus",
    "SgaConfig",
    "StepMode",
    "StopRule",
    "StrongConvexityEstimate",
    "Trace",
    "ViolationReport",
    "adasga_alpha",
    "adasga_complexity",
    "adasga_qhat",
    "adasga_strong_constants",
    "alpha_cap",
    "build_problem",
    "build_solver",
    "builtin_problems",
    "characterization_modulus",
    "check_holder_inequalities",
    "check_smooth_characterizations",
    "check_strong_smooth_bound",
    "classify_recursion",
    "default_alpha",
    "emit_plot",
    "env_seed_override",
    "estimate_holder_modulus",
    "estimate_kl",
    "estimate_strong_convexity",
    "feasible_claims",
    "finite_diff_gradient",
    "fit_linear_rate",
    "gamma_bb",
    "kl_rate_q2",
    "kl_step_upper",
    "lemma_compatible_mu",
    "local_lipschitz",
    "lyapunov_el",
    "lyapunov_hat",
    "lyapunov_hat_from_trace",
    "make_log_sum_exp",
    "make_poisson",
    "make_power_norm",
    "make_quadratic",
    "mn_bound",
    "read_trace_csv",
    "rng_from_seed",
    "run_adasga",
    "run_experiment",
    "run_sga",
    "sample_ball",
    "sample_pair_set",
    "sga_grad_complexity",
    "sga_step",
    "sga_strong_constants",
    "suite",
    "verify_bounds",
    "write_trace_csv",
]
