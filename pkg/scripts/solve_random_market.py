#!/usr/bin/env python3
"""Generate a random rental market, solve it, and print the outcome.

Usage: python scripts/solve_random_market.py [--rooms 3] [--agents 5] [--seed 0]
"""

import argparse
import random
from fractions import Fraction

from fairrent import SolverConfig, free_room_closure, quasilinear_oracle, solve_rental


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rooms", type=int, default=3)
    ap.add_argument("--agents", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    rooms = tuple(f"room{i + 1}" for i in range(args.rooms))
    n = max(args.agents, args.rooms)
    cuts = sorted(rng.sample(range(1, n), args.rooms - 1)) if args.rooms > 1 else []
    bounds = [0] + cuts + [n]
    caps = {r: bounds[i + 1] - bounds[i] for i, r in enumerate(rooms)}

    oracles = []
    print(f"market: {n} agents, capacities {caps}")
    for i in range(n):
        values = {r: Fraction(rng.randrange(0, 101), 100) for r in rooms}
        print(f"  agent{i + 1} values: {{{', '.join(f'{r}: {v}' for r, v in values.items())}}}")
        oracles.append(free_room_closure(quasilinear_oracle(f"agent{i + 1}", rooms, values, caps)))

    solution = solve_rental(oracles, caps, SolverConfig(seed=args.seed))
    print(f"\nstatus: {solution.status}")
    if solution.prices is not None:
        for r in rooms:
            print(f"  {r}: rent {solution.prices.value(r)} "
                  f"(~{float(solution.prices.value(r)):.4f}, "
                  f"{solution.prices.value(r) / caps[r]} per person)")
    if solution.assignment is not None:
        for room in rooms:
            folks = solution.assignment.occupants(room)
            print(f"  {room} <- {', '.join(folks) if folks else '(nobody)'}")
    print(f"stats: {solution.stats}")


if __name__ == "__main__":
    main()
