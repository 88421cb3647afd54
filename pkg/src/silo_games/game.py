"""Utility model of the cross-silo federated-learning game and its dilemma analysis.

Each organization picks how many of the ``r`` global aggregation rounds it
trains for.  Everyone receives the same global model, whose error shrinks
with the total participation, while each organization pays for its own
local iterations plus a fixed upload cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .states import ENUMERATION_CAP, StateSpace


@dataclass(frozen=True)
class OrgParams:
    unit_revenue: float  # m_i
    compute_coeff: float  # beta_i, cost per local iteration
    comm_cost: float  # C_m^i

    def __post_init__(self):
        for name in ("unit_revenue", "compute_coeff", "comm_cost"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class GameConfig:
    n_orgs: int
    local_iters: int
    max_rounds: int
    theta0: float
    theta1: float
    orgs: tuple[OrgParams, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "orgs", tuple(self.orgs))
        if self.n_orgs < 2:
            raise ValueError("n_orgs must be >= 2")
        if self.local_iters < 1:
            raise ValueError("local_iters must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        for name in ("theta0", "theta1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive real, got {value!r}")
        if len(self.orgs) != self.n_orgs:
            raise ValueError(f"expected {self.n_orgs} org entries, got {len(self.orgs)}")

    @classmethod
    def homogeneous(cls, n_orgs, local_iters, max_rounds, theta0, theta1, org: OrgParams):
        return cls(n_orgs, local_iters, max_rounds, theta0, theta1, (org,) * n_orgs)

    @property
    def n_actions(self) -> int:
        return self.max_rounds + 1

    @property
    def space(self) -> StateSpace:
        return StateSpace(self.n_orgs, self.n_actions)

    @property
    def chi0(self) -> float:
        return self.theta0 / self.theta1

    @property
    def revenue(self) -> np.ndarray:
        return np.array([o.unit_revenue for o in self.orgs], dtype=float)

    @property
    def beta(self) -> np.ndarray:
        return np.array([o.compute_coeff for o in self.orgs], dtype=float)

    @property
    def comm(self) -> np.ndarray:
        return np.array([o.comm_cost for o in self.orgs], dtype=float)


@dataclass(frozen=True)
class UtilityBreakdown:
    revenue: float  # Phi_i
    compute_cost: float  # C_p^i
    comm_cost: float  # C_m^i

    @property
    def cost(self) -> float:
        return self.compute_cost + self.comm_cost

    @property
    def utility(self) -> float:
        return self.revenue - self.cost


def model_precision(cfg: GameConfig, total_participation) -> float:
    """Expected loss gap of the global model after ``total_participation`` rounds."""
    total = int(total_participation)
    if total < 0:
        raise ValueError("total participation must be nonnegative")
    if total > cfg.n_orgs * cfg.max_rounds:
        raise ValueError(
            f"total participation {total} exceeds N*r = {cfg.n_orgs * cfg.max_rounds}"
        )
    return cfg.theta0 / (cfg.theta1 + cfg.local_iters * total)


def utility_breakdown(cfg: GameConfig, org_index: int, profile: Sequence[int]) -> UtilityBreakdown:
    prof = cfg.space.validate(profile)
    org = cfg.orgs[org_index]
    gain = cfg.chi0 - model_precision(cfg, sum(prof))
    return UtilityBreakdown(
        revenue=org.unit_revenue * gain,
        compute_cost=org.compute_coeff * cfg.local_iters * prof[org_index],
        comm_cost=org.comm_cost,
    )


def org_utility(cfg: GameConfig, org_index: int, profile: Sequence[int]) -> float:
    return utility_breakdown(cfg, org_index, profile).utility


def profile_utilities(cfg: GameConfig, profile: Sequence[int]) -> np.ndarray:
    """Per-organization utilities for one joint profile, in the same arithmetic
    as :func:`utility_matrix`."""
    y = np.asarray(cfg.space.validate(profile), dtype=float)
    gain = cfg.chi0 - cfg.theta0 / (cfg.theta1 + cfg.local_iters * y.sum())
    return cfg.revenue * gain - cfg.beta * cfg.local_iters * y - cfg.comm


def social_welfare(cfg: GameConfig, profile: Sequence[int]) -> float:
    prof = cfg.space.validate(profile)
    return sum(org_utility(cfg, i, prof) for i in range(cfg.n_orgs))


def utility_matrix(cfg: GameConfig, actions: np.ndarray | None = None) -> np.ndarray:
    """Utilities of every organization in every listed profile.

    ``actions`` defaults to the whole enumerated state space; the result has
    shape ``(len(actions), n_orgs)``.
    """
    if actions is None:
        actions = cfg.space.actions
    y = np.asarray(actions, dtype=float)
    totals = y.sum(axis=1)
    gain = cfg.chi0 - cfg.theta0 / (cfg.theta1 + cfg.local_iters * totals)
    return (
        gain[:, None] * cfg.revenue[None, :]
        - cfg.beta[None, :] * cfg.local_iters * y
        - cfg.comm[None, :]
    )


def pure_nash_equilibria(cfg: GameConfig, cap: int = ENUMERATION_CAP) -> list[tuple[int, ...]]:
    """All pure Nash equilibria, by checking every unilateral deviation."""
    space = cfg.space
    space.require_enumerable(cap)
    U = utility_matrix(cfg)
    is_ne = np.ones(space.size, dtype=bool)
    for i in range(cfg.n_orgs):
        tensor = U[:, i].reshape(space.shape)
        best = tensor.max(axis=i, keepdims=True)
        # strict improvement needed to break equilibrium
        is_ne &= (tensor >= best - 1e-12 * max(1.0, float(np.abs(best).max()))).reshape(-1)
    return [space.decode(j) for j in np.flatnonzero(is_ne)]


def own_action_strictly_decreasing(cfg: GameConfig, cap: int = ENUMERATION_CAP) -> bool:
    """True when raising any org's own action always lowers its utility."""
    space = cfg.space
    space.require_enumerable(cap)
    U = utility_matrix(cfg)
    for i in range(cfg.n_orgs):
        tensor = U[:, i].reshape(space.shape)
        if not np.all(np.diff(tensor, axis=i) < 0):
            return False
    return True


@dataclass(frozen=True)
class DilemmaReport:
    condition_holds_per_org: tuple[bool, ...]
    nash_profile: tuple[int, ...]
    nash_welfare: float
    full_participation_welfare: float
    is_dilemma: bool
    premise_positive_model_value: bool
    ne_certified: bool | None  # None when the enumeration cap was exceeded
    pure_equilibria: tuple[tuple[int, ...], ...] | None = None

    def as_dict(self) -> dict:
        return {
            "condition_holds_per_org": list(self.condition_holds_per_org),
            "nash_profile": list(self.nash_profile),
            "nash_welfare": self.nash_welfare,
            "full_participation_welfare": self.full_participation_welfare,
            "is_dilemma": self.is_dilemma,
            "premise_positive_model_value": self.premise_positive_model_value,
            "ne_certified": self.ne_certified,
            "pure_equilibria": None
            if self.pure_equilibria is None
            else [list(p) for p in self.pure_equilibria],
        }


def solo_training_condition(cfg: GameConfig) -> tuple[bool, ...]:
    """Per org: training alone never pays, i.e. m_i(chi0 - chi(y)) - beta_i K y < 0
    for every y in 1..r with everyone else idle."""
    y = np.arange(1, cfg.max_rounds + 1, dtype=float)
    gain = cfg.chi0 - cfg.theta0 / (cfg.theta1 + cfg.local_iters * y)
    out = []
    for org in cfg.orgs:
        net = org.unit_revenue * gain - org.compute_coeff * cfg.local_iters * y
        out.append(bool(np.all(net < 0)))
    return tuple(out)


def _best_response_profile(cfg: GameConfig, max_sweeps: int = 1000) -> tuple[int, ...]:
    # utility is concave in the own action and depends on others only through
    # their total, so sequential best responses settle quickly
    y = [0] * cfg.n_orgs
    actions = np.arange(cfg.n_actions, dtype=float)
    for _ in range(max_sweeps):
        changed = False
        for i, org in enumerate(cfg.orgs):
            others = sum(y) - y[i]
            gain = cfg.chi0 - cfg.theta0 / (cfg.theta1 + cfg.local_iters * (others + actions))
            u = org.unit_revenue * gain - org.compute_coeff * cfg.local_iters * actions
            best = int(np.argmax(u))
            if u[best] > u[y[i]] + 1e-12 and best != y[i]:
                y[i] = best
                changed = True
        if not changed:
            break
    return tuple(y)


def analyze_dilemma(cfg: GameConfig, cap: int = ENUMERATION_CAP) -> DilemmaReport:
    conditions = solo_training_condition(cfg)
    zero = (0,) * cfg.n_orgs
    full = (cfg.max_rounds,) * cfg.n_orgs
    nash = zero if all(conditions) else _best_response_profile(cfg)
    nash_welfare = float(profile_utilities(cfg, nash).sum())
    full_welfare = float(profile_utilities(cfg, full).sum())

    certified = None
    equilibria = None
    if cfg.space.is_enumerable(cap):
        found = pure_nash_equilibria(cfg, cap)
        equilibria = tuple(found)
        certified = nash in found
        if all(conditions):
            certified = certified and own_action_strictly_decreasing(cfg, cap)

    is_dilemma = all(conditions) and nash_welfare < full_welfare
    return DilemmaReport(
        condition_holds_per_org=conditions,
        nash_profile=nash,
        nash_welfare=nash_welfare,
        full_participation_welfare=full_welfare,
        is_dilemma=is_dilemma,
        premise_positive_model_value=full_welfare > 0,
        ne_certified=certified,
        pure_equilibria=equilibria,
    )
