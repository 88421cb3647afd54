"""One-round-memory strategies and the baseline families.

A strategy maps the previous round's joint profile to a probability row over
the organization's own actions ``0..r``.  Tables are used when the state
space is small; everything else evaluates its row on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .game import GameConfig
from .states import StateSpace

ROW_TOL = 1e-12
BASELINE_KINDS = ("allc", "alld", "rand", "tft", "mixed")
MIXABLE_KINDS = ("allc", "alld", "rand", "tft")
STRATEGY_KINDS = BASELINE_KINDS + ("mmzd",)


class StrategyError(ValueError):
    """A probability row violated the stochasticity invariant."""


def check_row(row: np.ndarray, tol: float = ROW_TOL) -> np.ndarray:
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or not np.all(np.isfinite(row)):
        raise StrategyError(f"malformed probability row {row!r}")
    if row.min() < -tol or row.max() > 1 + tol:
        raise StrategyError(f"probability outside [0, 1]: {row!r}")
    if abs(row.sum() - 1.0) > tol:
        raise StrategyError(f"row sums to {row.sum()!r}, not 1")
    return row


def check_table(table: np.ndarray, tol: float = ROW_TOL) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    if table.ndim != 2:
        raise StrategyError("strategy table must be 2-D")
    if table.min() < -tol or table.max() > 1 + tol:
        raise StrategyError("strategy table has entries outside [0, 1]")
    bad = np.flatnonzero(np.abs(table.sum(axis=1) - 1.0) > tol)
    if bad.size:
        raise StrategyError(f"rows {bad[:10].tolist()} do not sum to 1")
    return table


class Strategy:
    """Base class; subclasses implement :meth:`row`."""

    kind: str = "custom"
    n_actions: int

    def row(self, prior: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def table(self, space: StateSpace) -> np.ndarray:
        """Tabulate every row over an enumerable state space."""
        space.require_enumerable()
        return np.array([self.row(p) for p in space.actions])

    def bind(self, rng: np.random.Generator) -> "Strategy":
        """Fix any per-run randomness (used by Mixed); most strategies return self."""
        return self

    @property
    def label(self) -> str:
        return self.kind

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


class TableStrategy(Strategy):
    def __init__(self, probs: np.ndarray, space: StateSpace, kind: str = "table"):
        probs = check_table(probs)
        if probs.shape != (space.size, space.n_actions):
            raise StrategyError(
                f"table shape {probs.shape} != ({space.size}, {space.n_actions})"
            )
        self.probs = probs
        self.space = space
        self.kind = kind
        self.n_actions = space.n_actions

    def row(self, prior):
        return self.probs[self.space.encode(prior)]

    def table(self, space):
        if space != self.space:
            raise StrategyError("table strategy used on a different state space")
        return self.probs


class ConstantStrategy(Strategy):
    """Same row regardless of history (ALLC, ALLD, Rand)."""

    def __init__(self, probs, kind: str):
        self.probs = check_row(probs)
        self.probs.setflags(write=False)
        self.kind = kind
        self.n_actions = len(self.probs)

    def row(self, prior):
        return self.probs

    def table(self, space):
        space.require_enumerable()
        return np.broadcast_to(self.probs, (space.size, self.n_actions)).copy()


class TitForTat(Strategy):
    """Low half of the action range after a below-half round, high half otherwise."""

    kind = "tft"

    def __init__(self, n_orgs: int, max_rounds: int):
        r = max_rounds
        self.n_orgs = n_orgs
        self.n_actions = r + 1
        self.threshold2 = n_orgs * r  # compare 2*sum against N*r to stay in integers
        self.low = np.zeros(r + 1)
        self.low[: r // 2 + 1] = 1.0 / (r // 2 + 1)
        self.high = np.zeros(r + 1)
        self.high[(r + 1) // 2 :] = 1.0 / (r + 1 - (r + 1) // 2)

    def row(self, prior):
        return self.low if 2 * sum(prior) < self.threshold2 else self.high

    def table(self, space):
        low = 2 * space.actions.sum(axis=1) < self.threshold2
        return np.where(low[:, None], self.low[None, :], self.high[None, :])


class MixedStrategy(Strategy):
    """Plays one of ALLC/ALLD/Rand/TFT, fixed for a whole run.

    Unbound instances pick their family when :meth:`bind` is called at the
    start of each run.
    """

    kind = "mixed"

    def __init__(self, cfg: GameConfig, assigned: str | None = None):
        self.cfg = cfg
        self.n_actions = cfg.n_actions
        if assigned is not None and assigned not in MIXABLE_KINDS:
            raise ValueError(f"mixed assignment must be one of {MIXABLE_KINDS}")
        self.assigned = assigned
        self._inner = None if assigned is None else make_baseline(assigned, cfg)

    @property
    def label(self):
        return "mixed" if self.assigned is None else f"mixed:{self.assigned}"

    def bind(self, rng):
        if self.assigned is not None:
            return self
        return MixedStrategy(self.cfg, MIXABLE_KINDS[int(rng.integers(len(MIXABLE_KINDS)))])

    def row(self, prior):
        if self._inner is None:
            raise StrategyError("unbound mixed strategy has no fixed behavior yet")
        return self._inner.row(prior)

    def table(self, space):
        if self._inner is None:
            raise StrategyError("unbound mixed strategy cannot be tabulated")
        return self._inner.table(space)


@dataclass(frozen=True)
class BaselineKind:
    tag: str
    assignment: tuple[str, ...] | None = None  # per-org family, Mixed only

    def __post_init__(self):
        if self.tag not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.tag!r}; expected one of {BASELINE_KINDS}")
        if self.assignment is not None:
            if self.tag != "mixed":
                raise ValueError("only mixed takes a per-org assignment")
            bad = [a for a in self.assignment if a not in MIXABLE_KINDS]
            if bad:
                raise ValueError(f"mixed may only assign {MIXABLE_KINDS}, got {bad}")


def draw_mixed_assignment(n_orgs: int, rng: np.random.Generator) -> BaselineKind:
    picks = rng.integers(len(MIXABLE_KINDS), size=n_orgs)
    return BaselineKind("mixed", tuple(MIXABLE_KINDS[k] for k in picks))


def make_baseline(kind: str | BaselineKind, cfg: GameConfig, org_index: int = 0) -> Strategy:
    if isinstance(kind, str):
        kind = BaselineKind(kind)
    if not 0 <= org_index < cfg.n_orgs:
        raise ValueError(f"org index {org_index} out of range")
    r = cfg.max_rounds
    if kind.tag == "alld":
        return ConstantStrategy(np.eye(r + 1)[0], "alld")
    if kind.tag == "allc":
        return ConstantStrategy(np.eye(r + 1)[r], "allc")
    if kind.tag == "rand":
        return ConstantStrategy(np.full(r + 1, 1.0 / (r + 1)), "rand")
    if kind.tag == "tft":
        return TitForTat(cfg.n_orgs, r)
    assigned = None if kind.assignment is None else kind.assignment[org_index]
    return MixedStrategy(cfg, assigned)


class FunctionStrategy(Strategy):
    """Wrap an arbitrary ``prior -> row`` callable."""

    def __init__(self, fn: Callable[[tuple[int, ...]], np.ndarray], n_actions: int, kind="custom"):
        self.fn = fn
        self.n_actions = n_actions
        self.kind = kind

    def row(self, prior):
        return np.asarray(self.fn(tuple(prior)), dtype=float)


def act(strategy: Strategy, prior: Sequence[int], rng: np.random.Generator) -> int:
    """Sample one action; consumes exactly one uniform draw from ``rng``."""
    row = check_row(strategy.row(prior))
    u = rng.random()
    cdf = np.cumsum(row)
    g = int(np.searchsorted(cdf, u, side="right"))
    if g >= len(row):
        # u landed in the rounding gap above cdf[-1]
        g = int(np.flatnonzero(row > 0)[-1])
    return g
