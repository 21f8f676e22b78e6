"""Command-line front end: solve, eval, simulate, knowledge, gen.

Every run writes its primary output to --out (atomically) or stdout and
emits exactly one JSON run record on stderr echoing the full configuration.
Exit codes: 0 solved/ok, 2 invalid input, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time

from .errors import GameError, ResourceLimit
from .evaluation import (
    GENERATOR_ID,
    build_chain,
    monte_carlo,
    objective_probability,
)
from .gen import GenParams, generate_arena
from .knowledge import build_knowledge_arena
from .model import (
    Objective,
    format_probability,
    parse_game,
    parse_strategy,
    serialize_game,
    serialize_strategy,
)
from .solver import SolveReport, decide_almost_sure_buchi, decide_almost_sure_reach

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RESOURCE = 3


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str, what: str) -> str:
    try:
        with open(path) as handle:
            return handle.read()
    except OSError as exc:
        raise GameError(f"cannot read {what} file {path!r}: {exc}") from exc


def _run_record(command: str, config: dict, outcome: str, t0: float) -> None:
    record = {
        "command": command,
        "config": config,
        "elapsed_ms": int((time.perf_counter() - t0) * 1000),
        "outcome": outcome,
    }
    print(json.dumps(record), file=sys.stderr)


def _config_echo(args: argparse.Namespace) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _report_dict(report: SolveReport, config: dict) -> dict:
    doc = {
        "verdict": report.verdict,
        "objective": report.objective.value,
        "witness": json.loads(serialize_strategy(report.witness)) if report.witness else None,
        "witness_winning_knowledges": [list(k) for k in report.witness_winning_knowledges],
        "candidates_checked": report.candidates_checked,
        "elapsed_ms": report.elapsed_ms,
        "config": config,
    }
    if report.diagnostics is not None:
        doc["candidates"] = list(report.diagnostics)
    return doc


def cmd_solve(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    config = _config_echo(args)
    arena = parse_game(_read(args.game, "game"))
    decide = decide_almost_sure_reach if args.objective == "reach" else decide_almost_sure_buchi
    try:
        report = decide(
            arena,
            max_candidates=args.max_candidates,
            max_beliefs=args.max_beliefs,
            threads=args.threads,
            debug=args.debug_candidates,
        )
    except ResourceLimit as exc:
        partial = {
            "verdict": None,
            "objective": args.objective,
            "witness": None,
            "witness_winning_knowledges": [],
            "candidates_checked": exc.checked or 0,
            "elapsed_ms": int((time.perf_counter() - t0) * 1000),
            "config": config,
            "error": str(exc),
        }
        _write_output(json.dumps(partial, indent=2) + "\n", args.out)
        _run_record("solve", config, f"resource-limit: {exc}", t0)
        return EXIT_RESOURCE
    _write_output(json.dumps(_report_dict(report, config), indent=2) + "\n", args.out)
    _run_record("solve", config, f"verdict={report.verdict}", t0)
    return EXIT_OK


def _load_pair(args):
    arena = parse_game(_read(args.game, "game"))
    eve = parse_strategy(_read(args.eve, "eve strategy"))
    adam = parse_strategy(_read(args.adam, "adam strategy"))
    return arena, eve, adam


def cmd_eval(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    config = _config_echo(args)
    arena, eve, adam = _load_pair(args)
    objective = Objective.from_name(args.objective)
    chain = build_chain(arena, eve, adam)
    value = objective_probability(chain, objective)
    _write_output(
        json.dumps({"probability": format_probability(value), "method": "exact"}) + "\n",
        args.out,
    )
    _run_record("eval", config, f"probability={format_probability(value)}", t0)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    config = _config_echo(args)
    arena, eve, adam = _load_pair(args)
    objective = Objective.from_name(args.objective)
    result = monte_carlo(
        arena, eve, adam, objective, samples=args.samples, horizon=args.horizon, seed=args.seed
    )
    record = {
        "probability": format_probability(result.probability),
        "method": result.method,
        "samples": result.samples,
        "half_width": result.half_width,
        "approximate": result.approximate,
        "generator": GENERATOR_ID,
        "seed": args.seed,
        "horizon": args.horizon,
        "window": max(1, args.horizon // 10),
    }
    _write_output(json.dumps(record, indent=2) + "\n", args.out)
    _run_record("simulate", config, f"estimate={format_probability(result.probability)}", t0)
    return EXIT_OK


def cmd_knowledge(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    config = _config_echo(args)
    arena = parse_game(_read(args.game, "game"))
    ka = build_knowledge_arena(arena, max_states=args.max_beliefs)
    kstates, knowledges, edges = ka.census
    if args.dump:
        _write_output(serialize_game(ka.arena), args.out)
    print(f"census: knowledge_states={kstates} knowledges={knowledges} edges={edges}", file=sys.stderr)
    _run_record("knowledge", config, f"knowledge_states={kstates}", t0)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    config = _config_echo(args)
    params = GenParams(
        state_count=args.states,
        eve_action_count=args.eve_actions,
        adam_action_count=args.adam_actions,
        transition_density=args.density,
        eve_blocks=args.eve_blocks,
        adam_blocks=args.adam_blocks,
        final_count=args.final,
        seed=args.seed,
    )
    arena = generate_arena(params)
    _write_output(serialize_game(arena), args.out)
    _run_record("gen", config, f"states={args.states}", t0)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--max-candidates", type=int, default=10**7, help="cap on enumerated candidates")
    shared.add_argument("--max-beliefs", type=int, default=10**6, help="cap on materialized knowledge/belief states")
    shared.add_argument("--threads", type=int, default=1, help="parallel candidate checks (deterministic result)")
    shared.add_argument("--out", default=None, help="write primary output to this file (atomic)")
    shared.add_argument("--seed", type=int, default=0, help="seed for randomized commands")

    parser = argparse.ArgumentParser(
        prog="stochgames",
        description="Almost-sure winning in concurrent stochastic games with imperfect information",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", parents=[shared], help="decide almost-sure winning and synthesize a witness")
    p_solve.add_argument("--game", required=True)
    p_solve.add_argument("--objective", choices=["reach", "buchi"], required=True)
    p_solve.add_argument("--debug-candidates", action="store_true", help="include per-candidate diagnostics")
    p_solve.set_defaults(func=cmd_solve)

    p_eval = sub.add_parser("eval", parents=[shared], help="exact objective probability of a strategy pair")
    p_eval.add_argument("--game", required=True)
    p_eval.add_argument("--eve", required=True)
    p_eval.add_argument("--adam", required=True)
    p_eval.add_argument("--objective", choices=["reach", "safety", "buchi", "cobuchi"], required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_sim = sub.add_parser("simulate", parents=[shared], help="Monte Carlo estimate for a strategy pair")
    p_sim.add_argument("--game", required=True)
    p_sim.add_argument("--eve", required=True)
    p_sim.add_argument("--adam", required=True)
    p_sim.add_argument("--objective", choices=["reach", "safety", "buchi", "cobuchi"], required=True)
    p_sim.add_argument("--samples", type=int, required=True)
    p_sim.add_argument("--horizon", type=int, default=1000)
    p_sim.set_defaults(func=cmd_simulate)

    p_know = sub.add_parser("knowledge", parents=[shared], help="build the knowledge arena")
    p_know.add_argument("--game", required=True)
    p_know.add_argument("--dump", action="store_true", help="emit the knowledge arena as a game file")
    p_know.set_defaults(func=cmd_knowledge)

    p_gen = sub.add_parser("gen", parents=[shared], help="generate a random game file")
    p_gen.add_argument("--states", type=int, required=True)
    p_gen.add_argument("--eve-actions", type=int, default=2)
    p_gen.add_argument("--adam-actions", type=int, default=2)
    p_gen.add_argument("--density", type=float, default=1.0)
    p_gen.add_argument("--eve-blocks", type=int, default=1)
    p_gen.add_argument("--adam-blocks", type=int, default=1)
    p_gen.add_argument("--final", type=int, default=1)
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except GameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
