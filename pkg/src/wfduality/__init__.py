"""Simulation and duality-verification toolkit for two-type Wright-Fisher
models with selection in random environment."""

from .errors import (
    ConfigError,
    DegenerateKernelAtAtom,
    InfiniteJumpIntensity,
    InvalidScaling,
    InvalidStep,
    ModelError,
    NonConvergenceWarning,
    NonFiniteIntegrand,
    RegimeMismatch,
    SigmaNotZero,
    StateExplosionGuard,
    WfdualityError,
)
from .measures import (
    FiniteMeasure,
    SelectionKernel,
    check_master_condition,
    derive_env_measure,
    integrate,
    mean_excess,
    pgf,
    sum_distribution,
)
from .params import FiniteModelParams, LimitParams
from .wf_graph import (
    BlockCountPath,
    EnvSequence,
    FrequencyPath,
    draw_env,
    simulate_ancestry,
    simulate_frequency,
    step_ancestry,
    step_frequency,
)
from .fvwrs import absorption_scan, moment_estimate, simulate_path
from .bcre import (
    RateCache,
    RateTable,
    dual_moment,
    jump_rates,
    simulate,
    stationary_estimate,
)
from .duality import (
    DualityReport,
    ScalingScheme,
    annealed_check,
    convergence_experiment,
    eval_H,
    eval_H_mu,
    moment_check,
    quenched_check,
)
from .thresholds import (
    ThresholdReport,
    alpha_eff,
    alpha_star,
    alpha_star_mc,
    beta_star,
    beta_star_mc,
    classify,
)
from .bridge import (
    ExtinctionTable,
    FixationReport,
    extinction_corroboration,
    fixation_via_duality,
)

__version__ = "0.1.0"
