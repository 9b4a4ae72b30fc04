#!/usr/bin/env python3
"""Compare Monte Carlo origin-hitting estimates with the exact solve.

For each radius r the script estimates the probability that a planar walk
started at (r, 0) hits the origin before leaving the ball of radius 2r and
compares it with the exact value from the sparse linear solve.  The last two
columns track the logarithmic scale trend of the exact values: p * log2(r)
climbs toward 1 while the gap to log 2 / log r shrinks as r grows.

Example:
    python3 scripts/hitting_convergence.py --r-list 8,16,32 --reps 20000
"""
from __future__ import annotations

import argparse
import math

from erwlab.experiments import hitting_experiment
from erwlab.harness import default_workers
from erwlab.oracles import hitting_reference


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--r-list", default="8,16,32",
                        help="comma-separated inner radii")
    parser.add_argument("--reps", type=int, default=20000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    rs = [int(tok) for tok in args.r_list.split(",") if tok.strip()]
    workers = args.workers if args.workers is not None else default_workers()
    print(f"# reps={args.reps} seed={args.seed} workers={workers} "
          f"start=(r,0) domain=B(0,2r)")
    print(f"{'r':>6} {'mc':>9} {'exact':>9} {'dev_se':>7} "
          f"{'p*log2(r)':>10} {'|p-log2/logr|':>14}")
    for r in rs:
        ref = hitting_reference(r, (r, 0))
        est, _ = hitting_experiment(r, args.reps, seed=args.seed, workers=workers)
        p_hat = est["p_hit"].mean
        se = math.sqrt(ref.exact * (1.0 - ref.exact) / est["p_hit"].count)
        dev = (p_hat - ref.exact) / se if se else float("nan")
        scaled = ref.exact * math.log(r) / math.log(2)
        gap = abs(ref.exact - ref.ref_logr)
        print(f"{r:>6} {p_hat:>9.5f} {ref.exact:>9.5f} {dev:>+7.2f} "
              f"{scaled:>10.4f} {gap:>14.5f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
