"""Game-theoretic engine for the cross-silo federated-learning public goods game."""

from .game import (
    DilemmaReport,
    GameConfig,
    OrgParams,
    analyze_dilemma,
    model_precision,
    org_utility,
    social_welfare,
    utility_matrix,
)
from .markov import (
    StationaryResult,
    build_transition_matrix,
    controlled_column,
    expected_value,
    stationary_distribution,
)
from .mmzd import (
    AlphaBounds,
    InfeasiblePinning,
    PinningResult,
    PinningSpec,
    aggregate_alpha0_bounds,
    alpha0_bounds,
    max_pinned_welfare,
    state_welfare_vector,
    synthesize,
)
from .sim import SimPlan, Trajectory, convergence_report, run, strategy_grid
from .states import StateSpace
from .strategies import BaselineKind, Strategy, TableStrategy, act, make_baseline

__version__ = "0.1.0"
