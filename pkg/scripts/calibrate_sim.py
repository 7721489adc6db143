#!/usr/bin/env python3
"""Fit the simulated node profile and freeze it into the packaged config.

Procedure (also described in the README):

1. Pin the small-object target: choose per_request_overhead so that
   overhead + 100 bytes / service_rate lands at ~1000 ms, the observed
   idle-node latency for small uploads on a dedicated node.
2. Fix the client timeout at 20 minutes (a scenario constant: how long the
   harness waits before counting a request failed), then fit service_rate
   by grid search so the ascending large-file sweep (10..100 users,
   15 msgs/user over 15 min, 600 s drain between runs) shows: a turning
   point (error rate >= 50%) between 60 and 100 users, at least one run
   with 100% errors between 70 and 100 users, stable small-file latency
   throughout, and an error-free fresh node at 60 large requests/min.
3. Write the winning profile to src/pdskit/data/sim_calibrated.json.

Usage: python scripts/calibrate_sim.py [--write]
"""

import argparse
import json
from pathlib import Path

from pdskit import bench, defaults
from pdskit.store import SimNodeConfig, SimulatedNode
from pdskit.workload import build_schedule

SMALL_TARGET_MS = 1000.0
SMALL_PAYLOAD = 100
SEED = 7

CANDIDATE_RATES = [450_000, 500_000, 550_000, 600_000, 650_000]
TIMEOUT_MS = 1_200_000  # fixed client patience: 20 minutes


def make_profile(service_rate: float, timeout_ms: float) -> SimNodeConfig:
    overhead = SMALL_TARGET_MS - SMALL_PAYLOAD / service_rate * 1000.0
    return SimNodeConfig(
        service_rate=service_rate,
        per_request_overhead=round(overhead, 1),
        queue_capacity=100_000,
        request_timeout=timeout_ms,
        backlog=0,
        rng_seed=0,
        storage_capacity=64 * 1024 * 1024,
        latency_jitter=0.05,
    )


def evaluate(profile: SimNodeConfig, traces) -> dict:
    configs, schedules = bench.build_sweep(traces, seed=SEED, drain_interval_s=600.0)
    results = bench.run_sweep(configs, schedules, SimulatedNode(profile))
    stats = {r.config.label: bench.summarize(r) for r in results}

    large = [(r.config.n_users, stats[r.config.label]) for r in results
             if r.config.payload == "large"]
    small = [stats[r.config.label] for r in results if r.config.payload == "small"]

    turning = next((n for n, s in large if s.error_rate_pct >= 50.0), None)
    total_failure = next((n for n, s in large if s.error_rate_pct == 100.0), None)
    small_means = [s.mean_latency_ms for s in small]
    small_stable = (
        all(s.error_rate_pct == 0.0 for s in small)
        and max(small_means) <= 1.5 * min(small_means)
    )

    fresh60 = bench.run_scenario(
        bench.RunConfig(label="fresh-60", n_users=60, payload="large", seed=SEED),
        build_schedule(traces, 60, kind="photo", seed=SEED),
        SimulatedNode(profile),
    )
    fresh60_err = bench.summarize(fresh60).error_rate_pct

    return {
        "turning_point_users": turning,
        "total_failure_users": total_failure,
        "small_stable": small_stable,
        "fresh60_error_pct": fresh60_err,
        "ok": (
            turning is not None and 60 <= turning <= 100
            and total_failure is not None and 70 <= total_failure <= 100
            and small_stable
            and fresh60_err < 5.0
        ),
    }


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--write", action="store_true", help="freeze the winner")
    args = parser.parse_args()

    traces = defaults.default_traces()
    winner = None
    winner_rank = None
    for rate in CANDIDATE_RATES:
        profile = make_profile(rate, TIMEOUT_MS)
        verdict = evaluate(profile, traces)
        flag = "OK " if verdict["ok"] else "   "
        print(
            f"{flag}rate={rate:>7} "
            f"turn={verdict['turning_point_users']} "
            f"fail={verdict['total_failure_users']} "
            f"small_stable={verdict['small_stable']} "
            f"fresh60={verdict['fresh60_error_pct']:.1f}%"
        )
        if verdict["ok"]:
            # closest to turn=80 / total failure=90; ties go to the
            # higher rate (more headroom below the sustainable bound)
            rank = (
                abs(verdict["turning_point_users"] - 80)
                + abs(verdict["total_failure_users"] - 90),
                -profile.service_rate,
            )
            if winner is None or rank < winner_rank:
                winner, winner_rank = profile, rank

    if winner is None:
        raise SystemExit("no candidate satisfied all calibration targets")
    print(f"\nselected: rate={winner.service_rate} timeout={winner.request_timeout} "
          f"overhead={winner.per_request_overhead}")
    if args.write:
        out = (
            Path(__file__).resolve().parent.parent
            / "src/pdskit/data/sim_calibrated.json"
        )
        doc = {
            "service_rate": winner.service_rate,
            "per_request_overhead": winner.per_request_overhead,
            "queue_capacity": winner.queue_capacity,
            "request_timeout": winner.request_timeout,
            "backlog": winner.backlog,
            "rng_seed": winner.rng_seed,
            "storage_capacity": winner.storage_capacity,
            "latency_jitter": winner.latency_jitter,
        }
        out.write_text(json.dumps(doc, indent=4) + "\n", encoding="utf-8")
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
