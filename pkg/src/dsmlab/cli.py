"""Command-line front end.

Exit codes: 0 clean run, 1 scenario problem (unreadable file, parse or
validation error), 2 runtime invariant violation, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .gateway import GatewayServer
from .scenario import DEMO_SCENARIO, ScenarioError, load_scenario
from .testbed import InvariantViolation, Testbed

EX_OK = 0
EX_SCENARIO = 1
EX_INVARIANT = 2
EX_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse's default exit code for bad flags is 2, which this tool
    reserves for invariant violations; usage problems exit 64 instead."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="dsmlab",
                     description="Deterministic spectrum-management testbed.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("--scenario", required=True, metavar="PATH",
                     help="scenario file to run")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")
    run.add_argument("--duration-ms", type=int, default=None,
                     help="override the scenario duration")
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--headless", action="store_true",
                      help="run to completion without the API server (default)")
    mode.add_argument("--serve", metavar="ADDR",
                      help="serve the operator API at host:port while running")
    run.add_argument("--realtime", action="store_true",
                     help="pace 1 virtual ms per wall ms (needs --serve)")
    run.add_argument("--metrics-out", metavar="PATH",
                     help="write the per-second metrics CSV here")
    run.add_argument("--log-out", metavar="PATH",
                     help="write the event log here instead of stdout")
    run.add_argument("--static-dir", metavar="PATH", default=None,
                     help="dashboard assets to serve at / (with --serve)")

    demo = sub.add_parser("demo", help="print the bundled demo scenario")
    demo.add_argument("--out", metavar="PATH", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "demo":
        return _cmd_demo(args)
    return _cmd_run(parser, args)


def _cmd_demo(args) -> int:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(DEMO_SCENARIO)
    else:
        sys.stdout.write(DEMO_SCENARIO)
    return EX_OK


def _cmd_run(parser: _Parser, args) -> int:
    if args.realtime and not args.serve:
        try:
            parser.error("--realtime requires --serve")
        except SystemExit as exc:
            return int(exc.code or 0)

    try:
        with open(args.scenario) as fh:
            source = fh.read()
    except OSError as exc:
        print(f"error: cannot read scenario file {args.scenario!r}: "
              f"{exc.strerror or exc}", file=sys.stderr)
        return EX_SCENARIO
    try:
        scenario = load_scenario(source)
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EX_SCENARIO
    if args.seed is not None:
        scenario.seed = args.seed
    if args.duration_ms is not None:
        scenario.duration_ms = args.duration_ms

    try:
        testbed = Testbed(scenario)
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EX_SCENARIO

    code = EX_OK
    if args.serve:
        host, _, port_text = args.serve.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            try:
                parser.error(f"--serve expects host:port, got {args.serve!r}")
            except SystemExit as exc:
                return int(exc.code or 0)
        gateway = GatewayServer(testbed, host or "127.0.0.1", port,
                                static_dir=args.static_dir)
        gateway.start()
        bound = gateway.address
        print(f"serving on http://{bound[0]}:{bound[1]}/ "
              f"(scenario {args.scenario}, seed {scenario.seed})",
              file=sys.stderr)
        try:
            gateway.run_scenario(realtime=args.realtime)
        except InvariantViolation as exc:
            print(f"invariant violation: {exc}", file=sys.stderr)
            code = EX_INVARIANT
        except KeyboardInterrupt:
            pass
        finally:
            gateway.stop()
    else:
        try:
            testbed.run()
        except InvariantViolation as exc:
            print(f"invariant violation: {exc}", file=sys.stderr)
            code = EX_INVARIANT

    if args.log_out:
        testbed.write_log(args.log_out)
    elif not args.serve:
        for record in testbed.kernel.log_records:
            print(record)
    if args.metrics_out:
        testbed.write_metrics(args.metrics_out)
    return code


if __name__ == "__main__":
    sys.exit(main())
