#!/usr/bin/env python3
"""Replay the full stress-test sweep on the calibrated simulated node.

Runs small payloads for 10..100 users, then large, in ascending order with
a 600 s drain between runs so backlog carries over, and prints the per-run
summary table plus where the large-file turning point and total-failure
runs landed.

Usage: python scripts/run_paper_sweep.py [--drain 600] [--seed 7] [--out DIR]
"""

import argparse
import os
import time

from pdskit import bench, defaults
from pdskit.store import SimulatedNode


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--drain", type=float, default=600.0)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default=None, help="also export csv+json here")
    args = parser.parse_args()

    traces = defaults.default_traces()
    node = SimulatedNode(defaults.default_sim_config())
    configs, schedules = bench.build_sweep(
        traces, seed=args.seed, drain_interval_s=args.drain
    )

    t0 = time.perf_counter()
    results = bench.run_sweep(configs, schedules, node)
    elapsed = time.perf_counter() - t0

    print(bench.CSV_HEADER)
    for line in bench.summary_csv_lines(results)[1:]:
        print(line)

    large = [
        (r.config.n_users, bench.summarize(r).error_rate_pct)
        for r in results
        if r.config.payload == "large"
    ]
    turning = next((n for n, err in large if err >= 50.0), None)
    failure = next((n for n, err in large if err == 100.0), None)
    print(f"\nlarge-file turning point: {turning} users")
    print(f"first 100%-error run:     {failure} users")
    print(f"sweep wall time:          {elapsed:.1f}s (virtual: 20 runs x 15 min)")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        bench.export(results, "csv", os.path.join(args.out, "summary.csv"))
        bench.export(results, "json", os.path.join(args.out, "measurements.json"))
        print(f"reports written to {args.out}/")


if __name__ == "__main__":
    main()
