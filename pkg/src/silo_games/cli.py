"""Command-line entry point: ``silo-games <subcommand> --config PATH``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import report
from .config import ConfigError, RunConfig, load
from .game import analyze_dilemma, utility_matrix
from .markov import build_transition_matrix, expected_value, stationary_distribution
from .mmzd import (
    InfeasiblePinning,
    PinningResult,
    aggregate_alpha0_bounds,
    max_pinned_welfare,
    pinning_bounds,
    synthesize,
)
from .sim import SimPlan, run, strategy_grid
from .states import StateSpaceTooLarge
from .strategies import BaselineKind, MixedStrategy, Strategy, make_baseline

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2


def _slice_arg(text: str):
    if text == "all":
        return "all"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("slice must be an integer or 'all'") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration JSON")
    common.add_argument("--seed", type=int)
    common.add_argument("--rounds", type=int)
    common.add_argument("--reps", type=int)
    common.add_argument("--window", type=int)
    common.add_argument("--phi", type=float)
    common.add_argument("--slice", type=_slice_arg, help="slice action, or 'all' to search")
    common.add_argument("--out", help="write result files into this directory")
    common.add_argument("--format", choices=("csv", "json"))

    parser = argparse.ArgumentParser(
        prog="silo-games",
        description="Cross-silo federated-learning public goods game: analysis, "
        "welfare-pinning strategy synthesis and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="social dilemma report")
    b = sub.add_parser("bounds", parents=[common], help="feasible alpha0 interval")
    b.add_argument("--aggregate", action="store_true", help="force the enumeration-free bounds")
    sub.add_parser("synthesize", parents=[common], help="write the pinning strategy file")
    sub.add_parser("stationary", parents=[common], help="stationary distribution(s) of the configured profile")
    sub.add_parser("simulate", parents=[common], help="per-round trajectory CSV")
    sub.add_parser("grid", parents=[common], help="controller x opponent welfare grid")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    sim = cfg.sim
    for name in ("seed", "rounds", "reps", "window"):
        value = getattr(args, name)
        if value is not None:
            sim = replace(sim, **{name: value})
    if args.window is None and sim.window > sim.rounds:
        sim = replace(sim, window=sim.rounds)  # shortened run, inherited window
    if sim.rounds < 1 or sim.reps < 1 or not 1 <= sim.window <= sim.rounds:
        raise ConfigError("need rounds >= 1, reps >= 1 and 1 <= window <= rounds")
    if not 0 <= sim.seed < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    pinning = cfg.pinning
    if args.phi is not None:
        pinning = replace(pinning, phi=args.phi)
    if isinstance(args.slice, int):
        pinning = replace(pinning, slice=args.slice)
    pinning.validate_for(cfg.game)
    output = cfg.output
    if args.out is not None:
        output = replace(output, dir=args.out)
    if args.format is not None:
        output = replace(output, format=args.format)
    return replace(cfg, sim=sim, pinning=pinning, output=output)


def _emit(cfg: RunConfig, name: str, text: str) -> None:
    if cfg.output.dir is None:
        sys.stdout.write(text)
        return
    d = Path(cfg.output.dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(text)
    print(f"wrote {d / name}", file=sys.stderr)


def _pinning(cfg: RunConfig, search_all: bool) -> PinningResult:
    game = cfg.game
    if cfg.alpha0 is not None and not search_all:
        return synthesize(game, cfg.pinning, cfg.alpha0)
    slices = range(game.n_actions) if search_all else None
    return max_pinned_welfare(game, cfg.pinning, slices=slices)


def _per_slice_report(cfg: RunConfig) -> list[dict]:
    return [
        report.bounds_dict(pinning_bounds(cfg.game, replace(cfg.pinning, slice=g)))
        for g in range(cfg.game.n_actions)
    ]


def _strategies(cfg: RunConfig, search_all: bool = False) -> list[Strategy]:
    out: list[Strategy] = []
    for i, entry in enumerate(cfg.strategies):
        if entry.kind == "mmzd":
            out.append(_pinning(cfg, search_all).strategy)
        elif entry.kind == "mixed" and entry.assignment is not None:
            out.append(MixedStrategy(cfg.game, entry.assignment))
        else:
            out.append(make_baseline(BaselineKind(entry.kind), cfg.game, i))
    return out


def _ext(cfg: RunConfig) -> str:
    return "json" if cfg.output.format == "json" else "csv"


def _table(cfg: RunConfig, header, rows) -> str:
    if cfg.output.format == "json":
        return report.to_json(report.records(header, rows))
    return report.to_csv(header, rows)


def cmd_analyze(cfg: RunConfig, args) -> int:
    rep = analyze_dilemma(cfg.game).as_dict()
    text = report.to_json(rep) if cfg.output.format == "json" else report.key_values(rep)
    _emit(cfg, f"analysis.{_ext(cfg)}", text)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, args) -> int:
    game, spec = cfg.game, cfg.pinning
    slices = range(game.n_actions) if args.slice == "all" else [spec.slice]
    results = []
    for g in slices:
        s = replace(spec, slice=g)
        if args.aggregate:
            if not s.unit_weights:
                raise ConfigError("aggregate bounds need unit weights")
            b = aggregate_alpha0_bounds(game, s.phi, g, s.controller)
        else:
            b = pinning_bounds(game, s)
        results.append(report.bounds_dict(b))
    feasible = any(r["feasible"] for r in results)
    if len(results) == 1:
        body = results[0]
        text = report.to_json(body) if cfg.output.format == "json" else report.key_values(body)
    else:
        header = ["slice", "alpha0_min", "alpha0_max", "feasible"]
        rows = [[r["slice"], r["alpha0_min"], r["alpha0_max"], r["feasible"]] for r in results]
        text = _table(cfg, header, rows)
    _emit(cfg, f"bounds.{_ext(cfg)}", text)
    if not feasible:
        print("infeasible: no alpha0 keeps the slice probabilities in [0, 1]", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_synthesize(cfg: RunConfig, args) -> int:
    result = _pinning(cfg, args.slice == "all")
    enumerable = cfg.game.space.is_enumerable()
    if cfg.output.format == "json":
        text = report.pinning_json(result, cfg.game_hash(), enumerable)
    else:
        text = report.pinning_csv(result, cfg.game_hash(), enumerable)
    _emit(cfg, f"mmzd_strategy.{_ext(cfg)}", text)
    print(
        f"pinned value {report.fmt(result.pinned_value)} at slice {result.spec.slice}, "
        f"alpha0 {report.fmt(result.alpha0)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_stationary(cfg: RunConfig, args) -> int:
    space = cfg.game.space
    M = build_transition_matrix(_strategies(cfg, args.slice == "all"), space)
    result = stationary_distribution(M)
    welfare = utility_matrix(cfg.game).sum(axis=1)
    if cfg.output.dir is None:
        if cfg.output.format == "json":
            sys.stdout.write(_stationary_json(result, space, welfare))
        else:
            sys.stdout.write(report.stationary_csv(result, space))
    elif cfg.output.format == "json":
        _emit(cfg, "stationary.json", _stationary_json(result, space, welfare))
    else:
        for k, v in enumerate(result.distributions):
            name = "stationary.csv" if result.multiplicity == 1 else f"stationary_{k + 1}.csv"
            _emit(cfg, name, report.to_csv(*report.stationary_table(v, space)))
    summary = ", ".join(report.fmt(expected_value(v, welfare)) for v in result.distributions)
    flag = " (rank ambiguous)" if result.ambiguous else ""
    print(f"multiplicity {result.multiplicity}{flag}; stationary welfare {summary}", file=sys.stderr)
    return EXIT_OK


def _stationary_json(result, space, welfare) -> str:
    return report.to_json(
        {
            "multiplicity": result.multiplicity,
            "ambiguous": result.ambiguous,
            "distributions": [
                {
                    "welfare": expected_value(v, welfare),
                    "states": report.records(*report.stationary_table(v, space)),
                }
                for v in result.distributions
            ],
        }
    )


def cmd_simulate(cfg: RunConfig, args) -> int:
    s = cfg.sim
    plan = SimPlan(cfg.game, _strategies(cfg, args.slice == "all"), s.rounds, s.reps, s.seed, s.initial_state)
    header, rows = report.trajectory_table(run(plan))
    _emit(cfg, f"trajectory.{_ext(cfg)}", _table(cfg, header, rows))
    return EXIT_OK


def cmd_grid(cfg: RunConfig, args) -> int:
    s = cfg.sim
    pinning = _pinning(cfg, args.slice == "all")
    cells = strategy_grid(
        cfg.game,
        controller=cfg.pinning.controller,
        pinning=pinning,
        rounds=s.rounds,
        reps=s.reps,
        seed=s.seed,
        window=s.window,
        initial_state=s.initial_state,
    )
    header, rows = report.grid_table(cells)
    _emit(cfg, f"grid.{_ext(cfg)}", _table(cfg, header, rows))
    if cfg.output.dir is not None:
        for ctrl in dict.fromkeys(c.controller for c in cells):
            sub = [r for r in rows if r[0] == ctrl]
            _emit(cfg, f"grid_{ctrl}.{_ext(cfg)}", _table(cfg, header, sub))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "bounds": cmd_bounds,
    "synthesize": cmd_synthesize,
    "stationary": cmd_stationary,
    "simulate": cmd_simulate,
    "grid": cmd_grid,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load(args.config), args)
        return COMMANDS[args.command](cfg, args)
    except InfeasiblePinning as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        try:
            rows = _per_slice_report(cfg)
            print(report.to_csv(["slice", "alpha0_min", "alpha0_max", "feasible"],
                                [[r["slice"], r["alpha0_min"], r["alpha0_max"], r["feasible"]] for r in rows]),
                  file=sys.stderr, end="")
        except (ValueError, StateSpaceTooLarge):
            pass
        return EXIT_INFEASIBLE
    except (ConfigError, StateSpaceTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
