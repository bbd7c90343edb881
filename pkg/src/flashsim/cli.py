"""Command-line driver: load config, parse trace, validate, run, report.

Exit codes: 0 clean run, 1 constraint warnings under --strict, 2 input
errors (bad files, malformed trace/config, structurally invalid commands).
Diagnostics go to stderr with file:line context; the report goes to stdout
or the --out file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .commands import validate, written_pages, erased_blocks
from .engine import Policy, idle_accounting, run
from .errors import (
    FlashSimError,
    Severity,
    TraceParseError,
    ValidationFatal,
    Violation,
)
from .stats import build_report, emit
from .topology import SubsystemState
from .trace_io import parse_config, parse_trace


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flashsim",
        description="Trace-driven latency and energy simulator for NAND flash subsystems.",
    )
    parser.add_argument("--config", required=True, help="configuration file (INI)")
    parser.add_argument("--trace", required=True, help="command trace file")
    parser.add_argument(
        "--format",
        choices=("structured", "table"),
        default="structured",
        help="report format (default: structured JSON)",
    )
    parser.add_argument(
        "--events", action="store_true", help="append the per-event log to the report"
    )
    parser.add_argument(
        "--check",
        action="store_true",
        help="validate the trace against the config and constraints; no simulation",
    )
    parser.add_argument(
        "--strict", action="store_true", help="treat constraint warnings as fatal"
    )
    parser.add_argument("--out", help="write the report to this file instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    err = sys.stderr

    try:
        config_text = Path(args.config).read_text()
    except OSError as exc:
        print(f"{args.config}: cannot read config: {exc.strerror}", file=err)
        return 2
    try:
        trace_text = Path(args.trace).read_text()
    except OSError as exc:
        print(f"{args.trace}: cannot read trace: {exc.strerror}", file=err)
        return 2

    try:
        config = parse_config(config_text)
    except FlashSimError as exc:
        print(f"{args.config}: {exc}", file=err)
        return 2

    try:
        trace = parse_trace(trace_text, config.geometry)
    except TraceParseError as exc:
        for diag in exc.diagnostics:
            print(f"{args.trace}:{diag.line}: {diag.message}", file=err)
        return 2

    policy = replace(config.policy, strict=True) if args.strict else config.policy

    if args.check:
        return _check_only(trace, config, policy, args.trace, err)

    try:
        result = run(trace, config.geometry, config.supported, config.models, policy)
    except ValidationFatal as exc:
        _print_violations(exc.violations, args.trace, err)
        if any(v.severity is Severity.ERROR for v in exc.violations):
            return 2
        return 1  # warnings escalated by strict policy
    except ZeroDivisionError as exc:
        # a model expression divided by zero for some event context
        print(f"{args.config}: model evaluation failed: {exc}", file=err)
        return 2
    except FlashSimError as exc:
        print(f"{args.trace}: {exc}", file=err)
        return 2

    _print_violations(result.warnings, args.trace, err)
    idle = idle_accounting(result, config.geometry, config.models, policy)
    report = build_report(result, idle)
    rendered = emit(report, format=args.format, event_log=args.events)
    if args.out:
        try:
            Path(args.out).write_text(rendered)
        except OSError as exc:
            print(f"{args.out}: cannot write report: {exc.strerror}", file=err)
            return 2
    else:
        sys.stdout.write(rendered)
    return 0


def _check_only(trace, config, policy: Policy, trace_path: str, err) -> int:
    """Validate every command and replay state constraints; emit no report."""
    state = SubsystemState(
        config.geometry,
        endurance_limit=policy.endurance_limit,
        initially_written=policy.initially_written,
    )
    findings: list[Violation] = []
    for cmd in trace:
        findings.extend(
            validate(
                cmd,
                config.geometry,
                config.supported,
                same_offsets=policy.multi_plane_same_offsets,
            )
        )
        for addr in written_pages(cmd):
            findings.extend(
                v.located(cmd.sequence_id, cmd.line) for v in state.write_page(addr)
            )
        for addr in erased_blocks(cmd):
            findings.extend(
                v.located(cmd.sequence_id, cmd.line) for v in state.erase_block(addr)
            )
    _print_violations(findings, trace_path, err)
    errors = sum(1 for v in findings if v.severity is Severity.ERROR)
    warnings = len(findings) - errors
    print(
        f"checked {len(trace)} commands: {errors} errors, {warnings} warnings",
        file=err,
    )
    if errors:
        return 2
    if warnings and policy.strict:
        return 1
    return 0


def _print_violations(violations, trace_path: str, err) -> None:
    for v in violations:
        where = f"{trace_path}:{v.line}: " if v.line is not None else f"{trace_path}: "
        print(f"{where}{v.severity.value}: {v.message} [{v.rule.value}]", file=err)


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
