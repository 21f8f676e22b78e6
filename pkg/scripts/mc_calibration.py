#!/usr/bin/env python3
"""Coverage experiment for the Monte Carlo confidence intervals.

Simulates a one-step fair coin (exact reach probability 1/2) across many
seeds and reports how often the exact value falls inside the reported 95%
interval.  Expected coverage is about 95%.
"""

import argparse
import json
import sys
from fractions import Fraction

from stochgames import Objective, monte_carlo, parse_game
from stochgames.model import ADAM, EVE, FiniteMemoryStrategy

COIN = {
    "states": ["s", "f", "d"],
    "init": "s",
    "final": ["f"],
    "eve_actions": ["a"],
    "adam_actions": ["x"],
    "eve_obs": [["s"], ["f"], ["d"]],
    "adam_obs": [["s"], ["f"], ["d"]],
    "transitions": [
        {"from": "s", "eve": "a", "adam": "x", "to": {"f": "1/2", "d": "1/2"}},
        {"from": "f", "eve": "a", "adam": "x", "to": {"f": 1}},
        {"from": "d", "eve": "a", "adam": "x", "to": {"d": 1}},
    ],
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=30)
    parser.add_argument("--samples", type=int, default=2000)
    parser.add_argument("--horizon", type=int, default=10)
    args = parser.parse_args(argv)

    arena = parse_game(json.dumps(COIN))
    eve = FiniteMemoryStrategy.constant(EVE, "a", 3)
    adam = FiniteMemoryStrategy.constant(ADAM, "x", 3)
    exact = Fraction(1, 2)
    inside = 0
    for seed in range(args.seeds):
        result = monte_carlo(
            arena, eve, adam, Objective.REACHABILITY,
            samples=args.samples, horizon=args.horizon, seed=seed,
        )
        hit = abs(float(result.probability - exact)) <= result.half_width
        inside += hit
        print(f"seed={seed:3d} estimate={float(result.probability):.4f} "
              f"half_width={result.half_width:.4f} covered={hit}")
    print(f"coverage: {inside}/{args.seeds}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
