"""Data-driven time-limited h2 model reduction for discrete-time LTI systems."""
from .estimator import TimeLimitedH2Reducer
from .exceptions import (
    BacktrackExhausted, DimensionError, InfeasibleInit, RankDeficient, SolveFailure, TLMORError,
)
from .gradients import (
    GradientTriple, ModelBasedWorkspace, adjoint_power_map, gradient_data, gradient_model,
    solve_stein, solve_sylvester,
)
from .lti import (
    ImpulseData, ReducedModel, StateSpaceModel, add_noise, impulse_response,
    output_error_bound_check, random_stable_system, relative_error, simulate,
    simulate_convolution, spectral_radius, tl_h2_error, tl_h2_error_squared, tl_h2_norm,
)
from .objective import DataCrossTerms, FiniteGramians, data_cross_terms, finite_gramians, objective_value
from .optimizer import (
    ConvergenceTrace, IterationRecord, OptimizerConfig, era_init, minimize,
    minimize_stability_checked, random_init,
)

__version__ = "0.1.0"
