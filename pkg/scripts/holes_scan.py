#!/usr/bin/env python3
"""Scan the two-walk hole statistic across short-walk lengths.

A hole is a site visited by an independent short walk of length m but missed
by a long walk of length n, both planar and started at the origin.  For each
m the script reports quartiles of the hole count and the estimated
probability that the count stays at or below floor(m^(3/4)).

Example:
    python3 scripts/holes_scan.py --n 1000000 --m-list 256,1024,4096 --reps 200
"""
from __future__ import annotations

import argparse
import statistics

from erwlab.harness import default_workers
from erwlab.holes import HoleExperimentConfig, run_hole_experiment


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=10**6,
                        help="long-walk length")
    parser.add_argument("--m-list", default="256,1024,4096",
                        help="comma-separated short-walk lengths")
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--level", type=float, default=0.99)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    ms = [int(tok) for tok in args.m_list.split(",") if tok.strip()]
    workers = args.workers if args.workers is not None else default_workers()
    print(f"# n={args.n} reps={args.reps} seed={args.seed} workers={workers}")
    print(f"{'m':>8} {'threshold':>10} {'q1':>8} {'median':>8} {'q3':>8} "
          f"{'p_below':>9} {'ci_low':>8} {'ci_high':>8}")
    for m in ms:
        config = HoleExperimentConfig(args.n, m, args.reps, seed=args.seed)
        est, rows = run_hole_experiment(config, workers=workers, level=args.level)
        holes = sorted(row["holes"] for row in rows)
        q1, med, q3 = statistics.quantiles(holes, n=4)
        threshold = int(m ** 0.75)
        print(f"{m:>8} {threshold:>10} {q1:>8.0f} {med:>8.0f} {q3:>8.0f} "
              f"{est.mean:>9.4f} {est.ci_low:>8.4f} {est.ci_high:>8.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
