"""Command-line entry point.

Subcommands: `run` executes a scenario and writes trace.csv, metrics.json,
and resolved_scenario.json; `check` executes a verification suite; `serve`
hosts the teleoperation service; `report` renders figures for a completed
run directory. Scenario arguments accept a file path or the name of a
bundled scenario.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from typing import Optional, Sequence

from .checks import SUITES, run_suite
from .constraints import InfeasibleStartError
from .scenario_io import ScenarioError, bundled_scenario_path, load_scenario
from .sim import metrics, run
from .trace_io import write_csv, write_metrics

EXIT_OK = 0
EXIT_BAD_SCENARIO = 2
EXIT_INFEASIBLE = 3
EXIT_PORT_BUSY = 4


def _scenario_path(arg: str) -> str:
    if not os.path.exists(arg) and os.sep not in arg and not arg.endswith(".json"):
        try:
            return bundled_scenario_path(arg)
        except ScenarioError:
            pass
    return arg


def _fmt(value) -> str:
    if value is None:
        return "none"
    return f"{value:.6g}" if isinstance(value, float) else str(value)


def cmd_run(args) -> int:
    try:
        scenario, resolved = load_scenario(_scenario_path(args.scenario),
                                           overrides=args.overrides)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO
    out_dir = args.out or os.path.join("runs", scenario.name)
    os.makedirs(out_dir, exist_ok=True)
    try:
        trace = run(scenario)
    except InfeasibleStartError as exc:
        print(f"error: infeasible start: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    write_csv(trace, os.path.join(out_dir, "trace.csv"))
    summary = metrics(trace.columns(), trace.dt, trace.eps_num)
    write_metrics(summary, os.path.join(out_dir, "metrics.json"))
    with open(os.path.join(out_dir, "resolved_scenario.json"), "w") as fh:
        json.dump(resolved, fh, indent=2)
        fh.write("\n")

    print(f"{scenario.name} ({scenario.mode}): {summary['ticks']} ticks, "
          f"{summary['event_count']} observation events")
    print(f"  min w {_fmt(summary['min_w'])}, min w_hat {_fmt(summary['min_w_hat'])}, "
          f"total deviation {_fmt(summary['total_deviation'])}, "
          f"breaches {summary['breach_count']}")
    print(f"  wrote trace.csv, metrics.json, resolved_scenario.json to {out_dir}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_suite(args.suite)
    failed = False
    for result in results:
        mark = "PASS" if result.passed else "FAIL"
        print(f"[{mark}] {result.name} - {result.summary}")
        for line in result.lines:
            print(f"    {line}")
        failed = failed or not result.passed
    return 1 if failed else EXIT_OK


def _port_busy(host: str, port: int) -> bool:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError:
        return True
    finally:
        probe.close()
    return False


def cmd_serve(args) -> int:
    try:
        scenario, resolved = load_scenario(_scenario_path(args.scenario),
                                           overrides=args.overrides)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO
    if resolved["reference"]["kind"] != "external":
        print("error: serve needs a scenario with reference kind 'external'",
              file=sys.stderr)
        return EXIT_BAD_SCENARIO
    if _port_busy(args.host, args.port):
        print(f"error: port {args.port} is already in use", file=sys.stderr)
        return EXIT_PORT_BUSY

    import uvicorn

    from .teleop import create_app

    try:
        app = create_app(scenario, resolved)
    except InfeasibleStartError as exc:
        print(f"error: infeasible start: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"serving {scenario.name} on ws://{args.host}:{args.port}/ws")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_report

    try:
        outputs = render_report(args.run_dir)
    except (FileNotFoundError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO
    for path in outputs:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visifilter",
        description="Visibility-maintaining safety filter: runs, checks, "
                    "teleoperation, and reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write its outputs")
    p_run.add_argument("scenario", help="scenario file or bundled name")
    p_run.add_argument("--out", help="output directory (default runs/<name>)")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a scenario field, e.g. duration=5.0")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="run a verification suite")
    p_check.add_argument("suite", choices=SUITES)
    p_check.set_defaults(func=cmd_check)

    p_serve = sub.add_parser("serve", help="host the teleoperation service")
    p_serve.add_argument("scenario", help="scenario file or bundled name "
                                          "(reference kind must be 'external')")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="KEY=VALUE")
    p_serve.set_defaults(func=cmd_serve)

    p_report = sub.add_parser("report", help="render figures for a run directory")
    p_report.add_argument("run_dir")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
