#!/usr/bin/env python3
"""Solve a seeded corpus of random games and cross-check the verdicts.

For every game the solver runs for reachability and/or Buchi; each "yes"
witness is re-evaluated against the fully informed best response, and the
brute-force oracle is consulted where affordable.  A summary goes to stdout
and per-game rows to --out as JSON lines.
"""

import argparse
import json
import sys
import time

from stochgames import (
    Objective,
    best_response_full_info,
    brute_force_verdict,
    decide_almost_sure_buchi,
    decide_almost_sure_reach,
)
from stochgames.gen import generate_arena, random_params


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--games", type=int, default=200)
    parser.add_argument("--master-seed", type=int, default=2000)
    parser.add_argument("--objective", choices=["reach", "buchi", "both"], default="both")
    parser.add_argument("--max-states", type=int, default=4)
    parser.add_argument("--skip-oracle", action="store_true")
    parser.add_argument("--out", default=None, help="JSON-lines file with one row per (game, objective)")
    args = parser.parse_args(argv)

    objectives = {
        "reach": [(Objective.REACHABILITY, decide_almost_sure_reach)],
        "buchi": [(Objective.BUCHI, decide_almost_sure_buchi)],
        "both": [
            (Objective.REACHABILITY, decide_almost_sure_reach),
            (Objective.BUCHI, decide_almost_sure_buchi),
        ],
    }[args.objective]

    rows = []
    tally = {"yes": 0, "no": 0}
    oracle_tally = {"yes": 0, "no": 0, "unknown": 0, "skipped": 0}
    sound = unsound = disagreements = 0
    t0 = time.perf_counter()
    for i in range(args.games):
        params = random_params(args.master_seed + i, max_states=args.max_states)
        arena = generate_arena(params)
        for objective, decide in objectives:
            report = decide(arena, max_candidates=100_000)
            tally[report.verdict] += 1
            row = {
                "game": i,
                "seed": args.master_seed + i,
                "objective": objective.value,
                "states": params.state_count,
                "verdict": report.verdict,
                "candidates_checked": report.candidates_checked,
                "elapsed_ms": report.elapsed_ms,
            }
            if report.verdict == "yes":
                value = best_response_full_info(arena, report.witness, objective).probability
                row["best_response"] = f"{value.numerator}/{value.denominator}"
                if value == 1:
                    sound += 1
                else:
                    unsound += 1
            if args.skip_oracle:
                oracle_tally["skipped"] += 1
            else:
                oracle = brute_force_verdict(arena, objective)
                oracle_tally[oracle] += 1
                row["oracle"] = oracle
                if oracle in ("yes", "no") and oracle != report.verdict:
                    disagreements += 1
            rows.append(row)

    elapsed = time.perf_counter() - t0
    print(f"games={args.games} verdicts={tally} oracle={oracle_tally}")
    print(f"yes-witnesses certified by best response: {sound}, not certified: {unsound}")
    print(f"oracle disagreements: {disagreements}")
    print(f"elapsed: {elapsed:.1f}s")
    if args.out:
        with open(args.out, "w") as handle:
            for row in rows:
                handle.write(json.dumps(row) + "\n")
    return 1 if disagreements else 0


if __name__ == "__main__":
    sys.exit(main())
