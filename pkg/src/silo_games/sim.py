"""Monte-Carlo play of the iterated game.

Every repetition draws from its own PCG64 substream spawned from the plan
seed, so results do not depend on how repetitions are scheduled across
threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .game import GameConfig, utility_matrix
from .mmzd import PinningResult
from .strategies import Strategy, act, make_baseline

INITIAL_STATES = ("full", "zero", "uniform")
DEFAULT_WINDOW = 5
THREADS_ENV = "SILO_GAMES_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class SimPlan:
    cfg: GameConfig
    strategies: Sequence[Strategy]
    rounds: int = 20
    reps: int = 100
    seed: int | Sequence[int] = 0
    initial_state: str | tuple[int, ...] = "full"

    def __post_init__(self):
        if self.rounds < 1 or self.reps < 1:
            raise ValueError("rounds and reps must be >= 1")
        if len(self.strategies) != self.cfg.n_orgs:
            raise ValueError(f"need {self.cfg.n_orgs} strategies, got {len(self.strategies)}")
        if isinstance(self.initial_state, str):
            if self.initial_state not in INITIAL_STATES:
                raise ValueError(f"initial_state must be one of {INITIAL_STATES} or a profile")
        else:
            self.initial_state = self.cfg.space.validate(self.initial_state)


@dataclass
class Trajectory:
    actions: np.ndarray  # (reps, rounds, n_orgs)
    utilities: np.ndarray  # (reps, rounds, n_orgs)
    labels: list[list[str]]  # strategy label per rep and org
    welfare: np.ndarray = field(init=False)  # (reps, rounds)

    def __post_init__(self):
        self.welfare = self.utilities.sum(axis=2)

    @property
    def reps(self) -> int:
        return self.actions.shape[0]

    @property
    def rounds(self) -> int:
        return self.actions.shape[1]

    def round_mean(self) -> np.ndarray:
        return self.welfare.mean(axis=0)

    def round_std(self) -> np.ndarray:
        return self.welfare.std(axis=0, ddof=1) if self.reps > 1 else np.zeros(self.rounds)

    def running_mean(self) -> np.ndarray:
        return np.cumsum(self.round_mean()) / np.arange(1, self.rounds + 1)

    def window_means(self, window: int) -> np.ndarray:
        """Per-repetition mean welfare over the last ``window`` rounds."""
        if not 1 <= window <= self.rounds:
            raise ValueError(f"window must be in 1..{self.rounds}")
        return self.welfare[:, -window:].mean(axis=1)


def _initial(plan: SimPlan, rng: np.random.Generator) -> tuple[int, ...]:
    cfg = plan.cfg
    if plan.initial_state == "full":
        return (cfg.max_rounds,) * cfg.n_orgs
    if plan.initial_state == "zero":
        return (0,) * cfg.n_orgs
    if plan.initial_state == "uniform":
        return tuple(int(a) for a in rng.integers(cfg.n_actions, size=cfg.n_orgs))
    return tuple(plan.initial_state)


def _run_rep(plan: SimPlan, seed_seq: np.random.SeedSequence):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    strategies = [s.bind(rng) for s in plan.strategies]
    prior = _initial(plan, rng)
    played = np.empty((plan.rounds, plan.cfg.n_orgs), dtype=np.int64)
    for t in range(plan.rounds):
        prior = tuple(act(s, prior, rng) for s in strategies)
        played[t] = prior
    return played, [s.label for s in strategies]


def run(plan: SimPlan, threads: int | None = None) -> Trajectory:
    root = np.random.SeedSequence(plan.seed)
    children = root.spawn(plan.reps)
    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ss: _run_rep(plan, ss), children))
    else:
        results = [_run_rep(plan, ss) for ss in children]
    actions = np.stack([r[0] for r in results])
    flat = actions.reshape(-1, plan.cfg.n_orgs)
    utilities = utility_matrix(plan.cfg, flat).reshape(actions.shape)
    return Trajectory(actions, utilities, [r[1] for r in results])


@dataclass(frozen=True)
class ConvergenceReport:
    target: float
    window: int
    window_mean: float
    deviation: float
    std_error: float
    tolerance: float
    within: bool
    round_mean_std: float  # spread of per-round means inside the window


def convergence_report(
    traj: Trajectory, target: float, window: int = DEFAULT_WINDOW, tol: float | None = None
) -> ConvergenceReport:
    """Compare the final-window mean welfare with ``target``.

    Without an explicit ``tol`` the tolerance is three standard errors of the
    across-repetition window mean.
    """
    per_rep = traj.window_means(window)
    mean = float(per_rep.mean())
    se = float(per_rep.std(ddof=1) / np.sqrt(len(per_rep))) if len(per_rep) > 1 else 0.0
    tolerance = 3 * se if tol is None else tol
    dev = abs(mean - target)
    in_window = traj.round_mean()[-window:]
    return ConvergenceReport(
        target=float(target),
        window=window,
        window_mean=mean,
        deviation=dev,
        std_error=se,
        tolerance=tolerance,
        within=dev <= tolerance,
        round_mean_std=float(in_window.std(ddof=1)) if window > 1 else 0.0,
    )


CONTROLLERS = ("mmzd", "alld", "allc", "rand")
OPPONENTS = ("allc", "alld", "rand", "tft", "mixed")


@dataclass(frozen=True)
class GridCell:
    controller: str
    opponent: str
    mean_welfare: float
    std_welfare: float  # std across reps of the final-window mean
    reps: int
    pinned_target: float | None = None

    @property
    def std_error(self) -> float:
        return self.std_welfare / np.sqrt(self.reps)


def strategy_grid(
    cfg: GameConfig,
    controller: int = 0,
    controllers: Sequence[str] = CONTROLLERS,
    opponents: Sequence[str] = OPPONENTS,
    pinning: PinningResult | None = None,
    rounds: int = 20,
    reps: int = 100,
    seed: int = 0,
    window: int = DEFAULT_WINDOW,
    initial_state: str | tuple[int, ...] = "full",
    threads: int | None = None,
) -> list[GridCell]:
    """Final-window welfare for every (controller family, opponent family) pair."""
    cells = []
    for ci, ckind in enumerate(controllers):
        if ckind == "mmzd":
            if pinning is None:
                raise ValueError("an mmzd controller needs a pinning result")
            if pinning.spec.controller != controller:
                raise ValueError("pinning result was synthesized for a different controller")
            cstrat: Strategy = pinning.strategy
            target = pinning.pinned_value
        else:
            cstrat = make_baseline(ckind, cfg, controller)
            target = None
        for oi, okind in enumerate(opponents):
            strategies = [
                cstrat if x == controller else make_baseline(okind, cfg, x)
                for x in range(cfg.n_orgs)
            ]
            plan = SimPlan(cfg, strategies, rounds, reps, (int(seed), ci, oi), initial_state)
            per_rep = run(plan, threads).window_means(window)
            std = float(per_rep.std(ddof=1)) if reps > 1 else 0.0
            cells.append(GridCell(ckind, okind, float(per_rep.mean()), std, reps, target))
    return cells
