#!/usr/bin/env python3
"""Scan the ballistic speed of the excited walk across drift strengths.

For each epsilon the script runs seeded replications of a length-2n walk,
reports the mean first-coordinate speed R(n)_1 / n with its confidence
interval, and the fraction of replications that made no first-coordinate
progress over the doubling window ]n, 2n].

Example:
    python3 scripts/speed_scan.py --n 65536 --reps 200 --workers 4
"""
from __future__ import annotations

import argparse

from erwlab.experiments import speed_experiment
from erwlab.harness import default_workers


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--epsilons", default="0.02,0.05,0.1,0.16666666666666666",
                        help="comma-separated drift strengths in (0, 1/6]")
    parser.add_argument("--n", type=int, default=65536,
                        help="walk half-length; each replication runs 2n steps")
    parser.add_argument("--reps", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--level", type=float, default=0.99,
                        help="confidence level for the interval")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    epsilons = [float(tok) for tok in args.epsilons.split(",") if tok.strip()]
    workers = args.workers if args.workers is not None else default_workers()
    print(f"# n={args.n} reps={args.reps} seed={args.seed} workers={workers}")
    print(f"{'epsilon':>10} {'speed':>10} {'ci_low':>10} {'ci_high':>10} "
          f"{'p_no_progress':>14}")
    for eps in epsilons:
        est, _ = speed_experiment(eps, args.n, args.reps, seed=args.seed,
                                  workers=workers, level=args.level)
        speed = est["mean_speed"]
        stall = est["p_no_progress"]
        print(f"{eps:>10.5f} {speed.mean:>10.5f} {speed.ci_low:>10.5f} "
              f"{speed.ci_high:>10.5f} {stall.mean:>14.5f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
