"""Transition matrices of one-round-memory play and their stationary analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .states import ENUMERATION_CAP, StateSpace
from .strategies import Strategy, check_table

RANK_RTOL = 1e-10
ROW_SUM_TOL = 1e-10


@dataclass
class StationaryResult:
    distributions: list[np.ndarray]
    multiplicity: int
    method: str  # "null-space" | "power" | "adjugate"
    ambiguous: bool = False
    # nullity counts under a looser / tighter singular-value cutoff
    candidate_multiplicities: tuple[int, ...] = field(default_factory=tuple)

    @property
    def unique(self) -> bool:
        return self.multiplicity == 1 and not self.ambiguous

    @property
    def distribution(self) -> np.ndarray:
        if self.multiplicity != 1:
            raise ValueError(f"chain has {self.multiplicity} stationary distributions")
        return self.distributions[0]


def strategy_tables(strategies: Sequence[Strategy], space: StateSpace) -> list[np.ndarray]:
    if len(strategies) != space.n_orgs:
        raise ValueError(f"need {space.n_orgs} strategies, got {len(strategies)}")
    return [check_table(s.table(space)) for s in strategies]


def build_transition_matrix(
    strategies: Sequence[Strategy], space: StateSpace, cap: int = ENUMERATION_CAP
) -> np.ndarray:
    """M[v, w] = prod_i p^i(v, a_i(w))."""
    space.require_enumerable(cap)
    tables = strategy_tables(strategies, space)
    M = np.ones((space.size, space.size))
    for i, T in enumerate(tables):
        M *= T[:, space.actions[:, i]]
    return M


def check_stochastic(M: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("transition matrix must be square")
    if M.min() < -tol or M.max() > 1 + tol:
        raise ValueError("transition matrix entries outside [0, 1]")
    if np.abs(M.sum(axis=1) - 1).max() > tol:
        raise ValueError("transition matrix rows do not sum to 1")


def _normalize(v: np.ndarray) -> np.ndarray:
    v = np.where(v < 0, np.where(v >= -1e-12, 0.0, v), v)
    if v.min() < 0:
        raise ValueError("stationary vector has materially negative entries")
    return v / v.sum()


def _nullity(M: np.ndarray, rtol: float) -> tuple[int, bool, tuple[int, ...]]:
    s = np.linalg.svd(M - np.eye(len(M)), compute_uv=False)
    scale = s[0] if s[0] > 0 else 1.0
    count = int(np.sum(s <= rtol * scale))
    loose = int(np.sum(s <= rtol * 100 * scale))
    tight = int(np.sum(s <= rtol / 100 * scale))
    return count, loose != tight, (tight, count, loose)


def closed_classes(M: np.ndarray) -> list[np.ndarray]:
    """Recurrent communicating classes (closed strongly connected components)."""
    adj = M > 0
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    classes = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        outside = np.ones(len(M), dtype=bool)
        outside[members] = False
        if not adj[np.ix_(members, np.flatnonzero(outside))].any():
            classes.append(members)
    return classes


def _solve_class(P: np.ndarray) -> np.ndarray:
    n = len(P)
    A = (P - np.eye(n)).T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, b, rcond=None)[0]


def stationary_distribution(M: np.ndarray, rtol: float = RANK_RTOL) -> StationaryResult:
    """Basis of probability vectors spanning the left null space of M - I.

    Each closed class of the chain contributes one distribution supported on
    that class.  The class count is cross-checked against the numerical
    nullity of M - I; a mismatch or a singular value near the cutoff marks
    the result ambiguous.
    """
    M = np.asarray(M, dtype=float)
    check_stochastic(M)
    classes = closed_classes(M)
    dists = []
    for members in classes:
        v = np.zeros(len(M))
        v[members] = _solve_class(M[np.ix_(members, members)])
        dists.append(_normalize(v))
    nullity, near_cutoff, candidates = _nullity(M, rtol)
    ambiguous = near_cutoff or nullity != len(classes)
    if ambiguous:
        candidates = tuple(sorted(set(candidates) | {len(classes)}))
    return StationaryResult(dists, len(dists), "null-space", ambiguous, candidates)


def power_iteration(
    M: np.ndarray, tol: float = 1e-13, max_iter: int = 100_000, start: np.ndarray | None = None
) -> StationaryResult:
    M = np.asarray(M, dtype=float)
    check_stochastic(M)
    v = np.full(len(M), 1.0 / len(M)) if start is None else np.asarray(start, float)
    for _ in range(max_iter):
        nxt = v @ M
        if np.abs(nxt - v).max() < tol:
            v = nxt
            break
        v = nxt
    return StationaryResult([_normalize(v)], 1, "power")


def adjugate_row(A: np.ndarray, k: int) -> np.ndarray:
    """Row k of adj(A): entry j is (-1)^(k+j) det(A without row j, column k)."""
    n = len(A)
    out = np.empty(n)
    keep_cols = [c for c in range(n) if c != k]
    for j in range(n):
        keep_rows = [r for r in range(n) if r != j]
        minor = A[np.ix_(keep_rows, keep_cols)]
        out[j] = (-1) ** (k + j) * np.linalg.det(minor)
    return out


def adjugate_stationary(M: np.ndarray) -> StationaryResult:
    """Stationary vector from a row of adj(M - I).

    For a chain with a unique stationary distribution, every row of the
    adjugate is a multiple of it.  Rows are tried in turn until a nonzero
    one turns up.
    """
    M = np.asarray(M, dtype=float)
    check_stochastic(M)
    A = M - np.eye(len(M))
    for k in range(len(M)):
        row = adjugate_row(A, k)
        if np.abs(row.sum()) > 1e-300:
            return StationaryResult([_normalize(row / row.sum())], 1, "adjugate")
    raise ValueError("adjugate of M - I vanishes; stationary distribution is not unique")


def expected_value(v: np.ndarray, f: np.ndarray) -> float:
    """Long-run average of per-state quantity ``f`` under distribution ``v``."""
    v = np.asarray(v, dtype=float)
    f = np.asarray(f, dtype=float)
    if v.shape != f.shape:
        raise ValueError(f"shape mismatch {v.shape} vs {f.shape}")
    return float(v @ f / v.sum())


def controlled_column(
    strategy: Strategy, org_index: int, action: int, space: StateSpace
) -> np.ndarray:
    """Sum of the columns of M - I whose next-state action for ``org_index`` is ``action``.

    Other organizations' probabilities sum out, leaving p(j, g) - 1{a_i(j) = g};
    every stationary vector is orthogonal to it.
    """
    table = check_table(strategy.table(space))
    return table[:, action] - (space.actions[:, org_index] == action)
