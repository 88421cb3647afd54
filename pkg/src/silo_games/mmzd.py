"""Welfare-pinning zero-determinant strategies for one controlling organization.

The controller picks, for one of its actions ``g`` (the slice), the
probability of playing ``g`` next round as

    p(j, g) = phi * (S_j + alpha0) + 1{controller played g in state j}

where ``S_j`` is the weighted welfare of state ``j``.  The column of
``M - I`` belonging to that slice is then proportional to ``S + alpha0``, and
every stationary distribution ``v`` of the induced chain satisfies
``v . S = -alpha0`` whatever the other organizations do.  The remaining
probability mass is spread over the other actions by a completion rule,
which affects trajectories but not the pinned value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .game import GameConfig, profile_utilities, utility_matrix
from .states import ENUMERATION_CAP, StateSpace
from .strategies import Strategy, StrategyError, check_table

SNAP_TOL = 1e-12


class InfeasiblePinning(ValueError):
    """No alpha0 keeps every slice probability inside [0, 1]."""

    def __init__(self, message, bounds=(), violated_states=()):
        super().__init__(message)
        self.bounds = list(bounds)
        self.violated_states = list(violated_states)


# -- completion rules -------------------------------------------------------
# Each maps (controller's previous action, slice g, n_actions) to weights over
# actions, zero at g, summing to one.

def _uniform(own, g, n):
    w = np.full(n, 1.0 / (n - 1))
    w[g] = 0.0
    return w


def _one_hot(n, k):
    w = np.zeros(n)
    w[k] = 1.0
    return w


def _lowest(own, g, n):
    return _one_hot(n, 1 if g == 0 else 0)


def _highest(own, g, n):
    return _one_hot(n, n - 2 if g == n - 1 else n - 1)


def _nearest(own, g, n):
    return _one_hot(n, g - 1 if g > 0 else 1)


def _stay(own, g, n):
    return _one_hot(n, own) if own != g else _uniform(own, g, n)


COMPLETIONS: dict[str, Callable[[int, int, int], np.ndarray]] = {
    "uniform": _uniform,
    "lowest": _lowest,
    "highest": _highest,
    "nearest": _nearest,
    "stay": _stay,
}


@dataclass(frozen=True)
class PinningSpec:
    phi: float
    controller: int = 0
    slice: int = 0
    weights: tuple[float, ...] | None = None  # None means all ones
    completion: str = "uniform"

    def __post_init__(self):
        if not math.isfinite(self.phi) or self.phi == 0:
            raise ValueError("phi must be a finite nonzero real")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
            if not all(math.isfinite(w) for w in self.weights):
                raise ValueError("weights must be finite")
        if self.completion not in COMPLETIONS:
            raise ValueError(f"unknown completion {self.completion!r}; choose from {sorted(COMPLETIONS)}")

    def weight_vector(self, n_orgs: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(n_orgs)
        if len(self.weights) != n_orgs:
            raise ValueError(f"{len(self.weights)} weights for {n_orgs} orgs")
        return np.array(self.weights)

    @property
    def unit_weights(self) -> bool:
        return self.weights is None or all(w == 1.0 for w in self.weights)

    def validate_for(self, cfg: GameConfig) -> None:
        if not 0 <= self.controller < cfg.n_orgs:
            raise ValueError(f"controller {self.controller} out of range")
        if not 0 <= self.slice <= cfg.max_rounds:
            raise ValueError(f"slice {self.slice} outside 0..{cfg.max_rounds}")
        self.weight_vector(cfg.n_orgs)


@dataclass(frozen=True)
class AlphaBounds:
    alpha0_min: float
    alpha0_max: float
    feasible: bool
    binding_min: tuple[int, ...]  # state indices attaining alpha0_min
    binding_max: tuple[int, ...]
    phi: float
    slice: int
    controller: int

    def as_dict(self) -> dict:
        return {
            "controller": self.controller,
            "slice": self.slice,
            "phi": self.phi,
            "alpha0_min": self.alpha0_min,
            "alpha0_max": self.alpha0_max,
            "feasible": self.feasible,
            "binding_min": list(self.binding_min),
            "binding_max": list(self.binding_max),
        }


def state_welfare_vector(
    cfg: GameConfig, weights: Sequence[float] | None = None, cap: int = ENUMERATION_CAP
) -> np.ndarray:
    """S_j = sum_x w_x U^x(state j) over the enumerated state space."""
    cfg.space.require_enumerable(cap)
    w = np.ones(cfg.n_orgs) if weights is None else np.asarray(weights, dtype=float)
    return utility_matrix(cfg) @ w


def _per_state_limits(S, in_block, phi):
    # phi * (S + alpha0) must lie in [-1, 0] inside the slice block, [0, 1] outside
    lo = np.where(in_block, -1.0, 0.0)
    hi = np.where(in_block, 0.0, 1.0)
    if phi > 0:
        return lo / phi - S, hi / phi - S
    return hi / phi - S, lo / phi - S


def _tol(x):
    return 1e-12 * max(1.0, abs(x))


def _bounds_from(lower, upper, ids, phi, g, controller) -> AlphaBounds:
    a_min = float(lower.max())
    a_max = float(upper.min())
    bind_min = tuple(int(ids[k]) for k in np.flatnonzero(lower >= a_min - _tol(a_min)))
    bind_max = tuple(int(ids[k]) for k in np.flatnonzero(upper <= a_max + _tol(a_max)))
    return AlphaBounds(
        alpha0_min=a_min,
        alpha0_max=a_max,
        feasible=a_min <= a_max + 1e-12,
        binding_min=bind_min,
        binding_max=bind_max,
        phi=phi,
        slice=g,
        controller=controller,
    )


def alpha0_bounds(
    S: np.ndarray, phi: float, slice: int, controller: int, space: StateSpace
) -> AlphaBounds:
    """Feasible alpha0 interval by enumerating every state."""
    if phi == 0:
        raise ValueError("phi must be nonzero")
    S = np.asarray(S, dtype=float)
    if S.shape != (space.size,):
        raise ValueError("welfare vector does not match the state space")
    in_block = space.actions[:, controller] == slice
    lower, upper = _per_state_limits(S, in_block, phi)
    return _bounds_from(lower, upper, np.arange(space.size), phi, slice, controller)


def _greedy_fill(total: int, order: np.ndarray, r: int, n_orgs: int) -> list[int]:
    y = [0] * n_orgs
    left = total
    for x in order:
        take = min(r, left)
        y[x] = take
        left -= take
    return y


def aggregate_alpha0_bounds(
    cfg: GameConfig, phi: float, slice: int, controller: int = 0
) -> AlphaBounds:
    """Same interval as :func:`alpha0_bounds` (unit weights) without enumerating states.

    Welfare depends on the others only through their total participation and
    their summed compute cost.  For a fixed controller action and others'
    total, the cheapest and dearest ways to reach that total come from
    filling the lowest-beta (resp. highest-beta) organizations first, which
    gives the largest and smallest welfare.  Binding indices name one
    witness profile per bound.
    """
    if phi == 0:
        raise ValueError("phi must be nonzero")
    N, r, K = cfg.n_orgs, cfg.max_rounds, cfg.local_iters
    others = np.array([x for x in range(N) if x != controller])
    beta = cfg.beta
    asc = others[np.argsort(beta[others], kind="stable")]
    desc = asc[::-1]
    slots = np.arange(len(others))
    totals = np.arange(len(others) * r + 1)
    fill = np.clip(totals[:, None] - slots[None, :] * r, 0, r).astype(float)
    cost_min = K * (fill @ beta[asc])
    cost_max = K * (fill @ beta[desc])

    a = np.arange(r + 1)
    T = a[:, None] + totals[None, :]
    gain = cfg.chi0 - cfg.theta0 / (cfg.theta1 + K * T)
    base = cfg.revenue.sum() * gain - K * beta[controller] * a[:, None] - cfg.comm.sum()
    s_hi = base - cost_min[None, :]  # best welfare for (a, O)
    s_lo = base - cost_max[None, :]

    S = np.concatenate([s_hi.ravel(), s_lo.ravel()])
    A = np.concatenate([np.repeat(a, len(totals))] * 2)
    O = np.concatenate([np.tile(totals, len(a))] * 2)
    cheap = np.concatenate([np.ones(s_hi.size, bool), np.zeros(s_lo.size, bool)])
    lower, upper = _per_state_limits(S, A == slice, phi)

    space = cfg.space

    def witness(k):
        y = _greedy_fill(int(O[k]), asc if cheap[k] else desc, r, N)
        y[controller] = int(A[k])
        return space.encode(y)

    a_min = float(lower.max())
    a_max = float(upper.min())
    return AlphaBounds(
        alpha0_min=a_min,
        alpha0_max=a_max,
        feasible=a_min <= a_max + 1e-12,
        binding_min=(witness(int(np.argmax(lower))),),
        binding_max=(witness(int(np.argmin(upper))),),
        phi=phi,
        slice=slice,
        controller=controller,
    )


def pinning_bounds(cfg: GameConfig, spec: PinningSpec, cap: int = ENUMERATION_CAP) -> AlphaBounds:
    """Enumerated bounds when the state space is small, aggregate otherwise."""
    spec.validate_for(cfg)
    if cfg.space.is_enumerable(cap):
        S = state_welfare_vector(cfg, spec.weight_vector(cfg.n_orgs), cap)
        return alpha0_bounds(S, spec.phi, spec.slice, spec.controller, cfg.space)
    if not spec.unit_weights:
        raise ValueError("aggregate bounds support unit weights only")
    return aggregate_alpha0_bounds(cfg, spec.phi, spec.slice, spec.controller)


def _snap(p):
    p = np.where(np.abs(p) <= SNAP_TOL, 0.0, p)
    return np.where(np.abs(p - 1.0) <= SNAP_TOL, 1.0, p)


class MMZDStrategy(Strategy):
    """The controller's pinning strategy, evaluated on demand or tabulated."""

    kind = "mmzd"

    def __init__(self, cfg: GameConfig, spec: PinningSpec, alpha0: float):
        spec.validate_for(cfg)
        self.cfg = cfg
        self.spec = spec
        self.alpha0 = float(alpha0)
        self.n_actions = cfg.n_actions
        self._w = spec.weight_vector(cfg.n_orgs)
        self._completion = COMPLETIONS[spec.completion]
        n = cfg.n_actions
        self._fill = np.array([self._completion(own, spec.slice, n) for own in range(n)])

    def slice_probability(self, prior) -> float:
        s = float(profile_utilities(self.cfg, prior) @ self._w)
        own = prior[self.spec.controller]
        p = self.spec.phi * (s + self.alpha0) + (1.0 if own == self.spec.slice else 0.0)
        p = float(_snap(p))
        if not 0.0 <= p <= 1.0:
            raise StrategyError(f"slice probability {p!r} at state {tuple(prior)} leaves [0, 1]")
        return p

    def row(self, prior):
        p = self.slice_probability(prior)
        row = (1.0 - p) * self._fill[prior[self.spec.controller]]
        row[self.spec.slice] = p
        return row

    def slice_probabilities(self, space: StateSpace) -> np.ndarray:
        S = utility_matrix(self.cfg, space.actions) @ self._w
        in_block = space.actions[:, self.spec.controller] == self.spec.slice
        return _snap(self.spec.phi * (S + self.alpha0) + in_block)

    def table(self, space):
        space.require_enumerable()
        p = self.slice_probabilities(space)
        own = space.actions[:, self.spec.controller]
        table = (1.0 - p)[:, None] * self._fill[own]
        table[:, self.spec.slice] = p
        return check_table(table)


@dataclass
class PinningResult:
    strategy: MMZDStrategy
    alpha0: float
    bounds: AlphaBounds
    spec: PinningSpec

    @property
    def pinned_value(self) -> float:
        """-alpha0: the pinned weighted sum of expected utilities."""
        return -self.alpha0

    @property
    def pinned_welfare(self) -> float:
        if not self.spec.unit_weights:
            raise ValueError("pinned welfare is only the social welfare under unit weights")
        return -self.alpha0

    def as_dict(self) -> dict:
        return {
            "controller": self.spec.controller,
            "phi": self.spec.phi,
            "slice": self.spec.slice,
            "completion": self.spec.completion,
            "weights": None if self.spec.weights is None else list(self.spec.weights),
            "alpha0": self.alpha0,
            "pinned_value": self.pinned_value,
            "bounds": self.bounds.as_dict(),
        }


def synthesize(
    cfg: GameConfig, spec: PinningSpec, alpha0: float, cap: int = ENUMERATION_CAP
) -> PinningResult:
    bounds = pinning_bounds(cfg, spec, cap)
    lo_ok = alpha0 >= bounds.alpha0_min - _tol(bounds.alpha0_min)
    hi_ok = alpha0 <= bounds.alpha0_max + _tol(bounds.alpha0_max)
    if not (bounds.feasible and lo_ok and hi_ok):
        violated: list[int] = []
        if cfg.space.is_enumerable(cap):
            S = state_welfare_vector(cfg, spec.weight_vector(cfg.n_orgs), cap)
            in_block = cfg.space.actions[:, spec.controller] == spec.slice
            p = spec.phi * (S + alpha0) + in_block
            violated = np.flatnonzero((p < -SNAP_TOL) | (p > 1 + SNAP_TOL)).tolist()
        else:
            if not lo_ok:
                violated += list(bounds.binding_min)
            if not hi_ok:
                violated += list(bounds.binding_max)
        raise InfeasiblePinning(
            f"alpha0={alpha0!r} outside feasible interval "
            f"[{bounds.alpha0_min!r}, {bounds.alpha0_max!r}]",
            bounds=[bounds],
            violated_states=violated,
        )
    strategy = MMZDStrategy(cfg, spec, alpha0)
    if cfg.space.is_enumerable(cap):
        strategy.table(cfg.space)  # validates every row
    return PinningResult(strategy, float(alpha0), bounds, spec)


def max_pinned_welfare(
    cfg: GameConfig,
    spec: PinningSpec,
    slices: Sequence[int] | None = None,
    phis: Sequence[float] | None = None,
    cap: int = ENUMERATION_CAP,
) -> PinningResult:
    """Largest pinnable value -alpha0_min over the candidate slices and phis.

    By default only ``spec.slice`` and ``spec.phi`` are tried.  Ties keep the
    earliest candidate.
    """
    slices = [spec.slice] if slices is None else list(slices)
    phis = [spec.phi] if phis is None else list(phis)
    report: list[AlphaBounds] = []
    best: tuple[AlphaBounds, PinningSpec] | None = None
    for phi in phis:
        for g in slices:
            cand = replace(spec, phi=phi, slice=g)
            b = pinning_bounds(cfg, cand, cap)
            report.append(b)
            if b.feasible and (best is None or b.alpha0_min < best[0].alpha0_min):
                best = (b, cand)
    if best is None:
        raise InfeasiblePinning("no candidate slice admits a pinning strategy", bounds=report)
    b, cand = best
    return synthesize(cfg, cand, b.alpha0_min, cap)
