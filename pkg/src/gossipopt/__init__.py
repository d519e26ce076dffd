"""
gossipopt
=========

Gossip algorithms for scalar convex consensus optimization: every node holds
a private strictly convex objective and the network agrees on the minimizer
of their sum through pairwise exchanges only.

Pairwise Equalizing (PE) sets a gossiping pair to the common value that
keeps their derivative sum unchanged; Pairwise Bisectioning (PB) gets the
pair arbitrarily close through a few bisection rounds without ever sending
an objective.
"""

from .diagnostics import (
    DiagnosticsRow,
    approach_monotonicity_probe,
    beta_bound_check,
    conservation_residual,
    lyapunov,
    predicted_drop_pe,
)
from .engines import ConsensusState, PbTranscript, RoundsPolicy, init_state, pb_step, pe_step, select_rounds
from .errors import (
    BracketInvalid,
    ConfigInvalid,
    DomainViolation,
    GossipError,
    InvariantViolation,
    MaxIterExceeded,
    NumericalFailure,
    ScheduleExhausted,
)
from .harness import (
    ExperimentConfig,
    RunSummary,
    Simulation,
    compare_algorithms,
    load_config,
    run_experiment,
    verify_suite,
)
from .network import Scheduler, SchedulerSpec, SplitMix64, TopologySpec, window_connected
from .objective import ObjectiveSpec, exp_linear, log_barrier, parse_spec, quadratic, quartic, weighted_quadratic
from .rootfind import Bracket, bisect, invert_derivative, solve_equalized, solve_global_optimum

__all__ = [
    "BracketInvalid", "ConfigInvalid", "DomainViolation", "GossipError", "InvariantViolation",
    "MaxIterExceeded", "NumericalFailure", "ScheduleExhausted",
    "ObjectiveSpec", "parse_spec", "quadratic", "weighted_quadratic", "quartic", "exp_linear", "log_barrier",
    "Bracket", "bisect", "invert_derivative", "solve_equalized", "solve_global_optimum",
    "SplitMix64", "TopologySpec", "SchedulerSpec", "Scheduler", "window_connected",
    "ConsensusState", "PbTranscript", "RoundsPolicy", "init_state", "pe_step", "pb_step", "select_rounds",
    "DiagnosticsRow", "lyapunov", "predicted_drop_pe", "conservation_residual", "beta_bound_check",
    "approach_monotonicity_probe",
    "ExperimentConfig", "RunSummary", "Simulation", "load_config", "run_experiment", "compare_algorithms",
    "verify_suite",
]

__version__ = "0.1.0"
