#!/usr/bin/env python3
"""Divide a cake among agents with random per-piece tastes.

The cake is cut by |pieces| - 1 vertical cuts; piece r of size p[r] is
worth value[r] * p[r] to an agent, and nobody wants an empty piece.

Usage: python scripts/cake_demo.py [--pieces 3] [--seed 0]
"""

import argparse
import random
from fractions import Fraction

from fairrent import CakeProblem, SolverConfig, hungry_cake_oracle, solve_cake


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pieces", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    pieces = tuple(f"piece{i + 1}" for i in range(args.pieces))
    caps = {p: 1 for p in pieces}
    oracles = []
    for i in range(args.pieces):
        values = {p: Fraction(rng.randrange(1, 100), 20) for p in pieces}
        print(f"agent{i + 1} rates: {{{', '.join(f'{p}: {v}' for p, v in values.items())}}}")
        oracles.append(hungry_cake_oracle(f"agent{i + 1}", pieces, values))

    solution = solve_cake(CakeProblem(tuple(oracles), caps), SolverConfig(seed=args.seed))
    print(f"\nstatus: {solution.status}")
    for p in pieces:
        print(f"  {p}: size {solution.prices.value(p)} (~{float(solution.prices.value(p)):.4f})")
    for agent, piece in sorted(solution.assignment.items()):
        print(f"  {agent} eats {piece}")


if __name__ == "__main__":
    main()
