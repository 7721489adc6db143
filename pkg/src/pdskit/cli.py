"""pdsbench: run scenarios, sweeps, and reports from the command line.

Exit codes: 0 on success, 2 when any scenario aborted.
"""

import argparse
import json
import os
import sys

from . import bench, defaults
from .store import RemoteGateway, SimNodeConfig, SimulatedNode, load_sim_config
from .workload import (
    SPACING_TRACE,
    SPACING_UNIFORM,
    build_schedule,
    parse_trace_file,
)

EXIT_OK = 0
EXIT_ABORTED = 2


def _make_backend(kind: str, gw_url, sim_config: SimNodeConfig):
    if kind == "sim":
        return SimulatedNode(sim_config)
    if kind in ("ipfs-gw", "skynet-gw"):
        if not gw_url:
            raise SystemExit(f"--gw-url is required for backend {kind}")
        protocol = "ipfs-api" if kind == "ipfs-gw" else "skynet-upload"
        return RemoteGateway(gw_url, protocol=protocol)
    raise SystemExit(f"unknown backend kind: {kind}")


def _load_traces(path):
    if path:
        return parse_trace_file(path)
    return defaults.default_traces()


def _sim_config(path) -> SimNodeConfig:
    if path:
        return load_sim_config(path)
    return defaults.default_sim_config()


def _parse_users_range(spec: str) -> list[int]:
    """'10:100:10' inclusive range, or a single count like '40'."""
    parts = [int(p) for p in spec.split(":")]
    if len(parts) == 1:
        return parts
    if len(parts) == 2:
        parts.append(10)
    start, stop, step = parts
    return list(range(start, stop + 1, step))


def _write_outputs(results, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    bench.export(results, "json", os.path.join(out_dir, "measurements.json"))
    bench.export(results, "csv", os.path.join(out_dir, "summary.csv"))


def cmd_run(args) -> int:
    sim_config = _sim_config(args.sim_config)
    backend = _make_backend(args.backend, args.gw_url, sim_config)
    traces = _load_traces(args.trace)
    kind = bench.payload_kind(args.payload)
    schedule = build_schedule(
        traces, args.users, kind=kind, seed=args.seed, spacing=args.spacing
    )
    config = bench.RunConfig(
        label=f"{args.payload}-{args.users:03d}",
        n_users=args.users,
        payload=args.payload,
        seed=args.seed,
        drain_interval_s=args.drain,
        backend_kind=args.backend,
        gw_url=args.gw_url,
    )
    result = bench.run_scenario(config, schedule, backend)
    _write_outputs([result], args.out)
    for line in bench.summary_csv_lines([result]):
        print(line)
    return EXIT_ABORTED if result.aborted else EXIT_OK


def cmd_sweep(args) -> int:
    file_cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)

    backend_kind = file_cfg.get("backend", "sim")
    gw_url = file_cfg.get("gw_url")
    seed = int(file_cfg.get("seed", args.seed))
    out_dir = file_cfg.get("out", args.out)
    sim_cfg_value = file_cfg.get("sim_config")
    if isinstance(sim_cfg_value, dict):
        sim_config = SimNodeConfig(**sim_cfg_value)
        sim_config.validate()
    else:
        sim_config = _sim_config(sim_cfg_value)
    traces = _load_traces(file_cfg.get("trace"))

    users = _parse_users_range(args.users)
    payloads = [p.strip() for p in args.payloads.split(",") if p.strip()]
    backend = _make_backend(backend_kind, gw_url, sim_config)

    configs, schedules = bench.build_sweep(
        traces,
        users=users,
        payloads=payloads,
        seed=seed,
        drain_interval_s=args.drain,
        backend_kind=backend_kind,
        gw_url=gw_url,
    )
    results = bench.run_sweep(configs, schedules, backend)
    _write_outputs(results, out_dir)
    for line in bench.summary_csv_lines(results):
        print(line)
    return EXIT_ABORTED if any(r.aborted for r in results) else EXIT_OK


def cmd_report(args) -> int:
    path = os.path.join(args.in_dir, "measurements.json")
    if not os.path.exists(path):
        raise SystemExit(f"no measurements.json under {args.in_dir}")
    results = bench.load_results_json(path)
    if args.format == "csv":
        for line in bench.summary_csv_lines(results):
            print(line)
    else:
        print(json.dumps(bench.results_to_json_doc(results), sort_keys=True, indent=1))
    return EXIT_ABORTED if any(r.aborted for r in results) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdsbench")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--backend", default="sim", choices=["sim", "ipfs-gw", "skynet-gw"])
    run.add_argument("--gw-url", default=None)
    run.add_argument("--trace", default=None, help="trace CSV (default: bundled excerpt)")
    run.add_argument("--users", type=int, required=True)
    run.add_argument("--payload", default="small", choices=["small", "large"])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results")
    run.add_argument("--drain", type=float, default=600.0)
    run.add_argument("--sim-config", default=None)
    run.add_argument(
        "--spacing", default=SPACING_TRACE, choices=[SPACING_TRACE, SPACING_UNIFORM]
    )
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run an ordered scenario sweep")
    sweep.add_argument("--users", default="10:100:10", help="start:stop:step, inclusive")
    sweep.add_argument("--payloads", default="small,large")
    sweep.add_argument("--drain", type=float, default=600.0, choices=None)
    sweep.add_argument("--config", default=None, help="JSON file: backend/trace/seed/out")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", default="results")
    sweep.set_defaults(func=cmd_sweep)

    report = sub.add_parser("report", help="summarize saved measurements")
    report.add_argument("--in", dest="in_dir", required=True)
    report.add_argument("--format", default="csv", choices=["csv", "json"])
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
