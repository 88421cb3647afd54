"""Run configuration files (JSON).

Organization indices in files are 1-based, matching the CSV column names;
in memory they are 0-based.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .game import GameConfig, OrgParams
from .mmzd import COMPLETIONS, PinningSpec
from .sim import DEFAULT_WINDOW, INITIAL_STATES
from .strategies import MIXABLE_KINDS, STRATEGY_KINDS


class ConfigError(ValueError):
    pass


_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["game"],
    "properties": {
        "description": {"type": "string"},
        "game": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_orgs", "local_iters", "max_rounds", "theta0", "theta1", "orgs"],
            "properties": {
                "n_orgs": {"type": "integer", "minimum": 2},
                "local_iters": {"type": "integer", "minimum": 1},
                "max_rounds": {"type": "integer", "minimum": 1},
                "theta0": {"type": "number", "exclusiveMinimum": 0},
                "theta1": {"type": "number", "exclusiveMinimum": 0},
                "orgs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["unit_revenue", "compute_coeff", "comm_cost"],
                        "properties": {
                            "unit_revenue": _NONNEG,
                            "compute_coeff": _NONNEG,
                            "comm_cost": _NONNEG,
                        },
                    },
                },
            },
        },
        "strategies": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"enum": list(STRATEGY_KINDS)},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind"],
                        "properties": {
                            "kind": {"enum": list(STRATEGY_KINDS)},
                            "assignment": {"enum": list(MIXABLE_KINDS)},
                        },
                    },
                ]
            },
        },
        "pinning": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "controller": {"type": "integer", "minimum": 1},
                "phi": _NUM,
                "slice": {"type": "integer", "minimum": 0},
                "weights": {"oneOf": [{"type": "null"}, {"type": "array", "items": _NUM}]},
                "completion": {"enum": sorted(COMPLETIONS)},
                "alpha0": {"oneOf": [{"type": "null"}, _NUM]},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rounds": {"type": "integer", "minimum": 1},
                "reps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "initial_state": {
                    "oneOf": [
                        {"enum": list(INITIAL_STATES)},
                        {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    ]
                },
                "window": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"oneOf": [{"type": "null"}, {"type": "string"}]},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}


@dataclass(frozen=True)
class StrategyEntry:
    kind: str
    assignment: str | None = None  # fixed family for a mixed org


@dataclass(frozen=True)
class SimSettings:
    rounds: int = 20
    reps: int = 100
    seed: int = 0
    initial_state: str | tuple[int, ...] = "full"
    window: int = DEFAULT_WINDOW


@dataclass(frozen=True)
class OutputSettings:
    dir: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    game: GameConfig
    strategies: tuple[StrategyEntry, ...]
    pinning: PinningSpec
    alpha0: float | None = None
    sim: SimSettings = field(default_factory=SimSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    description: str = ""

    def to_dict(self) -> dict:
        g = self.game
        strategies = [
            s.kind if s.assignment is None else {"kind": s.kind, "assignment": s.assignment}
            for s in self.strategies
        ]
        init = self.sim.initial_state
        return {
            "description": self.description,
            "game": {
                "n_orgs": g.n_orgs,
                "local_iters": g.local_iters,
                "max_rounds": g.max_rounds,
                "theta0": g.theta0,
                "theta1": g.theta1,
                "orgs": [
                    {
                        "unit_revenue": o.unit_revenue,
                        "compute_coeff": o.compute_coeff,
                        "comm_cost": o.comm_cost,
                    }
                    for o in g.orgs
                ],
            },
            "strategies": strategies,
            "pinning": {
                "controller": self.pinning.controller + 1,
                "phi": self.pinning.phi,
                "slice": self.pinning.slice,
                "weights": None if self.pinning.weights is None else list(self.pinning.weights),
                "completion": self.pinning.completion,
                "alpha0": self.alpha0,
            },
            "sim": {
                "rounds": self.sim.rounds,
                "reps": self.sim.reps,
                "seed": self.sim.seed,
                "initial_state": init if isinstance(init, str) else list(init),
                "window": self.sim.window,
            },
            "output": {"dir": self.output.dir, "format": self.output.format},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def game_hash(self) -> str:
        blob = json.dumps(self.to_dict()["game"], sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _path(err: jsonschema.ValidationError) -> str:
    out = ""
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def from_dict(data: Any) -> RunConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        first = errors[0]
        raise ConfigError(f"{_path(first)}: {first.message}")

    try:
        g = data["game"]
        game = GameConfig(
            n_orgs=g["n_orgs"],
            local_iters=g["local_iters"],
            max_rounds=g["max_rounds"],
            theta0=float(g["theta0"]),
            theta1=float(g["theta1"]),
            orgs=tuple(
                OrgParams(float(o["unit_revenue"]), float(o["compute_coeff"]), float(o["comm_cost"]))
                for o in g["orgs"]
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"game: {exc}") from None

    p = data.get("pinning", {})
    controller = p.get("controller", 1) - 1
    if controller >= game.n_orgs:
        raise ConfigError(f"pinning.controller: {controller + 1} exceeds n_orgs={game.n_orgs}")
    try:
        pinning = PinningSpec(
            phi=float(p.get("phi", 0.01)),
            controller=controller,
            slice=p.get("slice", 0),
            weights=p.get("weights"),
            completion=p.get("completion", "uniform"),
        )
        pinning.validate_for(game)
    except ValueError as exc:
        raise ConfigError(f"pinning: {exc}") from None
    alpha0 = p.get("alpha0")

    raw = data.get("strategies", ["rand"] * game.n_orgs)
    if len(raw) != game.n_orgs:
        raise ConfigError(f"strategies: expected {game.n_orgs} entries, got {len(raw)}")
    entries = []
    for i, item in enumerate(raw):
        entry = StrategyEntry(item) if isinstance(item, str) else StrategyEntry(
            item["kind"], item.get("assignment")
        )
        if entry.assignment is not None and entry.kind != "mixed":
            raise ConfigError(f"strategies[{i}].assignment: only mixed takes an assignment")
        if entry.kind == "mmzd" and i != controller:
            raise ConfigError(
                f"strategies[{i}]: mmzd may only be played by the pinning controller "
                f"(org {controller + 1})"
            )
        entries.append(entry)

    s = data.get("sim", {})
    init = s.get("initial_state", "full")
    if not isinstance(init, str):
        try:
            init = game.space.validate(init)
        except ValueError as exc:
            raise ConfigError(f"sim.initial_state: {exc}") from None
    sim = SimSettings(
        rounds=s.get("rounds", 20),
        reps=s.get("reps", 100),
        seed=s.get("seed", 0),
        initial_state=init,
        window=s.get("window", DEFAULT_WINDOW),
    )
    if sim.window > sim.rounds:
        raise ConfigError(f"sim.window: {sim.window} exceeds sim.rounds={sim.rounds}")

    o = data.get("output", {})
    output = OutputSettings(dir=o.get("dir"), format=o.get("format", "csv"))
    return RunConfig(
        game=game,
        strategies=tuple(entries),
        pinning=pinning,
        alpha0=None if alpha0 is None else float(alpha0),
        sim=sim,
        output=output,
        description=data.get("description", ""),
    )


def loads(text: str, source: str = "<string>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads(text, str(path))
