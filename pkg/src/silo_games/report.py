"""CSV / JSON emission with stable number formatting."""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable, Sequence

import numpy as np

from .markov import StationaryResult
from .mmzd import AlphaBounds, PinningResult
from .sim import GridCell, Trajectory
from .states import StateSpace

SIG_DIGITS = 12


def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0:
            return "0"  # drops the sign of -0.0
        return f"{x:.{SIG_DIGITS}g}"
    if x is None:
        return ""
    return str(x)


def rounded(obj: Any) -> Any:
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj)) if obj != 0 else 0.0
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(rounded(obj), indent=2) + "\n"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def records(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> list[dict]:
    return [dict(zip(header, row)) for row in rows]


def _flat(v: Any) -> Any:
    if isinstance(v, (list, tuple)):
        sep = "; " if any(isinstance(x, (list, tuple)) for x in v) else " "
        return sep.join(_flat(x) for x in v)
    return fmt(v)


def key_values(d: dict) -> str:
    return to_csv(["key", "value"], ([k, _flat(v)] for k, v in d.items()))


def trajectory_table(traj: Trajectory) -> tuple[list[str], list[list]]:
    n = traj.actions.shape[2]
    header = (
        ["rep", "round"]
        + [f"org_{i + 1}" for i in range(n)]
        + [f"action_{i + 1}" for i in range(n)]
        + [f"utility_{i + 1}" for i in range(n)]
        + ["welfare"]
    )
    rows = []
    for rep in range(traj.reps):
        labels = traj.labels[rep]
        for t in range(traj.rounds):
            rows.append(
                [rep + 1, t + 1]
                + list(labels)
                + [int(a) for a in traj.actions[rep, t]]
                + [float(u) for u in traj.utilities[rep, t]]
                + [float(traj.welfare[rep, t])]
            )
    return header, rows


GRID_HEADER = ["controller", "opponent", "mean_welfare", "std_welfare", "pinned_target"]


def grid_table(cells: Sequence[GridCell]) -> tuple[list[str], list[list]]:
    rows = [[c.controller, c.opponent, c.mean_welfare, c.std_welfare, c.pinned_target] for c in cells]
    return list(GRID_HEADER), rows


STATIONARY_HEADER = ["state_index", "actions", "probability"]


def stationary_table(v: np.ndarray, space: StateSpace) -> tuple[list[str], list[list]]:
    rows = [
        [j, " ".join(str(a) for a in space.decode(j)), float(v[j])] for j in range(space.size)
    ]
    return list(STATIONARY_HEADER), rows


def stationary_csv(result: StationaryResult, space: StateSpace) -> str:
    """All distributions in one stream, each preceded by a comment line."""
    parts = [f"# multiplicity: {result.multiplicity}\n"]
    for k, v in enumerate(result.distributions):
        parts.append(f"# distribution {k + 1} of {result.multiplicity}\n")
        parts.append(to_csv(*stationary_table(v, space)))
    return "".join(parts)


def bounds_dict(b: AlphaBounds) -> dict:
    d = b.as_dict()
    d["controller"] += 1
    return d


def pinning_header(result: PinningResult, game_hash: str) -> dict:
    spec = result.spec
    return {
        "config_sha256": game_hash,
        "controller": spec.controller + 1,
        "phi": spec.phi,
        "slice": spec.slice,
        "alpha0": result.alpha0,
        "pinned_value": result.pinned_value,
        "completion": spec.completion,
        "weights": "unit" if spec.weights is None else " ".join(fmt(w) for w in spec.weights),
    }


def pinning_csv(result: PinningResult, game_hash: str, enumerable: bool) -> str:
    """Strategy file: '#'-prefixed header, then per-state slice probabilities
    (or, for unenumerable games, the closed-form rule parameters)."""
    head = "".join(f"# {k}: {fmt(v)}\n" for k, v in pinning_header(result, game_hash).items())
    cfg = result.strategy.cfg
    if enumerable:
        space = cfg.space
        p = result.strategy.slice_probabilities(space)
        rows = [[j, " ".join(map(str, space.decode(j))), float(p[j])] for j in range(space.size)]
        return head + to_csv(["state_index", "actions", "p_slice"], rows)
    rule = {
        "rule": "p_slice = phi * (sum_x w_x U^x(prior) + alpha0) + 1{prior controller action == slice}",
        "phi": result.spec.phi,
        "alpha0": result.alpha0,
        "slice": result.spec.slice,
        "controller": result.spec.controller + 1,
        "completion": result.spec.completion,
    }
    return head + key_values(rule)


def pinning_json(result: PinningResult, game_hash: str, enumerable: bool) -> str:
    body: dict[str, Any] = {"header": pinning_header(result, game_hash)}
    if enumerable:
        space = result.strategy.cfg.space
        body["slice_probabilities"] = result.strategy.slice_probabilities(space).tolist()
    else:
        body["rule"] = "closed-form"
    return to_json(body)


def read_pinning_csv(text: str) -> tuple[dict[str, str], list[float]]:
    header: dict[str, str] = {}
    probs: list[float] = []
    lines = text.splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    for ln in lines:
        if ln.startswith("# "):
            k, _, v = ln[2:].partition(": ")
            header[k] = v
    reader = csv.DictReader(body)
    if reader.fieldnames and "p_slice" in reader.fieldnames:
        probs = [float(row["p_slice"]) for row in reader]
    return header, probs
