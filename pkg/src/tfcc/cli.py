"""Command line entry point: ``tfcc run | experiment | validate``.

Exit status is 0 on success, 1 when a simulation fails and 2 for bad
configuration (missing file, unknown key, out-of-range value).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (ConfigError, Protocol, ScenarioConfig, dump_scenario, reference_scenario_path,
                     parse_experiment, parse_scenario)

EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tfcc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--scenario", type=Path, help="scenario file (default: built-in reference scenario)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--protocol", choices=[x.value for x in Protocol], help="override the file's protocol")
    r.add_argument("--duration", type=float, help="override duration_s")
    r.add_argument("--out", type=Path, default=Path("run_output"), help="output directory")
    r.add_argument("--tables", action="store_true",
                   help="also write trust, route, rate and congestion tables")
    r.add_argument("--trace", action="store_true", help="write the event trace as trace.jsonl")

    e = sub.add_parser("experiment", help="sweep variants and seeds")
    e.add_argument("--spec", type=Path, required=True, help="experiment file")
    e.add_argument("--out", type=Path, help="output directory (overrides the file)")
    e.add_argument("--workers", type=int, default=1, help="parallel runs")

    v = sub.add_parser("validate", help="check a scenario file and print the resolved config")
    v.add_argument("--scenario", type=Path, required=True)
    return p


def _cmd_run(args) -> int:
    from .netsim import init_scenario, run, write_tables

    config = parse_scenario(args.scenario) if args.scenario else parse_scenario(reference_scenario_path())
    overrides = {}
    if args.protocol:
        overrides["protocol"] = Protocol(args.protocol)
    if args.duration is not None:
        overrides["duration_s"] = args.duration
    if overrides:
        config = ScenarioConfig.from_dict({**config.to_dict(), **overrides})
    try:
        state = init_scenario(config, args.seed, trace=args.trace)
        timeline = run(state)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(timeline.to_csv(), encoding="utf-8")
    if args.tables:
        write_tables(state, out)
    if args.trace:
        (out / "trace.jsonl").write_text(state.trace_jsonl(), encoding="utf-8")
    last = timeline[-1] if timeline else None
    ss = timeline.steady_state_throughput(config.warmup_s)
    print(f"{config.protocol.value} seed={args.seed}: generated={last.generated if last else 0} "
          f"delivered={last.delivered if last else 0} steady-state throughput={ss:.4f} -> {out}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    from .experiment import run_experiment

    spec = parse_experiment(args.spec, output_dir=args.out)
    result = run_experiment(spec, workers=max(1, args.workers))
    for (name, seed), err in sorted(result.failures.items()):
        print(f"run {name} seed {seed} failed:\n{err}", file=sys.stderr)
    print(f"{len(result.throughput)} runs written to {result.output_dir}")
    return EXIT_OK if result.ok else EXIT_RUN_FAILURE


def _cmd_validate(args) -> int:
    config = parse_scenario(args.scenario)
    sys.stdout.write(dump_scenario(config))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "experiment": _cmd_experiment, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
