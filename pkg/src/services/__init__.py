# Services package
from .analytic import (
    AnalyticError,
    ThresholdUnreachable,
    expected_ratio_closed,
    expected_ratio_discrete,
    expected_ratio_quadrature,
    solve_stop_probability,
    stop_iteration_expected,
    success_probability,
    table1,
)
from .estimator import (
    CorrectedRatio,
    CounterState,
    EstimatorError,
    RatioFlag,
    corrected_ratio,
    should_stop,
)
from .engine import EngineError, Register, RegisterTooLarge, trial_rng
from .backends import RegisterBackend, get_backend
from .search import (
    SearchError,
    SimulationCapExceeded,
    deterministic_expectation_run,
    run_canonical,
    run_proposed,
)
from .harness import (
    HarnessError,
    HorizonOverflow,
    compare_modes,
    exact_stop_distribution,
    monte_carlo,
    scaling_fit,
    sweep,
    wilson_interval,
)
