"""Aggregation of run output into machine- and human-readable reports.

Accumulation discipline: the report's total energy is defined as the sum of
the per-event-kind totals plus the sum of the per-resource idle totals, each
total accumulated left-to-right (event-kind declaration order; resources in
sorted order). The conservation identity
``total == sum(kind totals) + sum(idle totals)`` is therefore exact, not
approximate, and is asserted on every build. Percentiles use the
nearest-rank definition. All report content is emitted in a fixed,
documented order so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .commands import CommandKind, EventKind
from .engine import RunResult, busy_time_ns
from .errors import Rule, Violation
from .topology import Resource

REPORT_SCHEMA = "flashsim-report v1"

PERCENTILES = (50, 95, 99)


@dataclass(frozen=True)
class KindStats:
    kind: CommandKind
    count: int
    mean_us: float
    min_us: float
    max_us: float
    percentiles_us: tuple[float, ...]  # matches PERCENTILES


@dataclass(frozen=True)
class ResourceUsage:
    resource: Resource
    busy_us: float
    utilization: float  # busy / makespan, in [0, 1]
    idle_energy_uj: float


@dataclass(frozen=True)
class EventLogRecord:
    sequence_id: int
    event_id: int
    kind: EventKind
    target: str
    resource: str | None
    start_us: float
    duration_us: float
    energy_uj: float


@dataclass(frozen=True)
class CommandRow:
    sequence_id: int
    kind: CommandKind
    arrival_us: float
    completion_us: float
    latency_us: float
    energy_uj: float
    warning_count: int


@dataclass(frozen=True)
class Report:
    command_count: int
    makespan_us: float
    commands: tuple[CommandRow, ...]
    kind_stats: tuple[KindStats, ...]
    energy_by_kind: tuple[tuple[EventKind, float], ...]
    event_energy_uj: float
    idle_energy_uj: float
    total_energy_uj: float
    usage: tuple[ResourceUsage, ...]
    warning_counts: tuple[tuple[Rule, int], ...]
    warnings: tuple[Violation, ...]
    events: tuple[EventLogRecord, ...]


def nearest_rank(sorted_values: list[float], percentile: int) -> float:
    """Nearest-rank percentile of an ascending, non-empty sample."""
    rank = math.ceil(percentile / 100 * len(sorted_values))
    return sorted_values[max(rank, 1) - 1]


def build_report(
    run: RunResult, idle: Mapping[Resource, float] | None = None
) -> Report:
    """Aggregate a completed run (plus optional idle energies) into a Report."""
    idle = idle or {}

    rows = tuple(
        CommandRow(
            r.sequence_id,
            r.kind,
            r.arrival_ns / 1000,
            r.completion_ns / 1000,
            r.latency_ns / 1000,
            r.energy_uj,
            len(r.warnings),
        )
        for r in run.results
    )

    kind_stats = []
    for kind in CommandKind:
        latencies = sorted(
            r.latency_ns / 1000 for r in run.results if r.kind is kind
        )
        if not latencies:
            continue
        kind_stats.append(
            KindStats(
                kind,
                len(latencies),
                sum(latencies) / len(latencies),
                latencies[0],
                latencies[-1],
                tuple(nearest_rank(latencies, p) for p in PERCENTILES),
            )
        )

    energy_by_kind = []
    for kind in EventKind:
        events = [e for e in run.schedule if e.kind is kind]
        if events:
            total = 0.0
            for e in events:
                total += e.energy_uj
            energy_by_kind.append((kind, total))

    event_energy = 0.0
    for _, kind_total in energy_by_kind:
        event_energy += kind_total

    idle_energy = 0.0
    for resource in sorted(idle):
        idle_energy += idle[resource]

    makespan_us = run.makespan_ns / 1000
    busy = busy_time_ns(run.schedule)
    usage = []
    for resource in sorted(set(busy) | set(idle)):
        busy_us = busy.get(resource, 0) / 1000
        idle_uj = idle.get(resource, 0.0)
        if busy_us == 0 and idle_uj == 0:
            continue  # untouched resources with no idle cost stay out of the report
        utilization = busy_us / makespan_us if makespan_us > 0 else 0.0
        usage.append(ResourceUsage(resource, busy_us, utilization, idle_uj))

    warning_counts = []
    for rule in Rule:
        count = sum(1 for w in run.warnings if w.rule is rule)
        if count:
            warning_counts.append((rule, count))

    events = tuple(
        EventLogRecord(
            e.sequence_id,
            e.event_id,
            e.kind,
            e.target_label,
            e.resource.label if e.resource else None,
            e.start_ns / 1000,
            e.duration_ns / 1000,
            e.energy_uj,
        )
        for e in run.schedule
    )

    report = Report(
        command_count=len(run.results),
        makespan_us=makespan_us,
        commands=rows,
        kind_stats=tuple(kind_stats),
        energy_by_kind=tuple(energy_by_kind),
        event_energy_uj=event_energy,
        idle_energy_uj=idle_energy,
        total_energy_uj=event_energy + idle_energy,
        usage=tuple(usage),
        warning_counts=tuple(warning_counts),
        warnings=tuple(run.warnings),
        events=events,
    )
    _assert_conserved(report)
    return report


def _assert_conserved(report: Report) -> None:
    total = 0.0
    for _, kind_total in report.energy_by_kind:
        total += kind_total
    total += report.idle_energy_uj
    if total != report.total_energy_uj:  # pragma: no cover - identity by construction
        raise AssertionError("energy breakdown does not reproduce the total")


def emit(report: Report, format: str = "structured", event_log: bool = False) -> str:
    """Render a report; identical reports always render identical bytes."""
    if format == "structured":
        return _emit_structured(report, event_log)
    if format == "table":
        return _emit_table(report, event_log)
    raise ValueError(f"unknown report format '{format}'")


def _emit_structured(report: Report, event_log: bool) -> str:
    doc: dict = {
        "schema": REPORT_SCHEMA,
        "command_count": report.command_count,
        "makespan_us": report.makespan_us,
        "total_energy_uj": report.total_energy_uj,
        "event_energy_uj": report.event_energy_uj,
        "idle_energy_uj": report.idle_energy_uj,
        "commands": [
            {
                "sequence_id": c.sequence_id,
                "kind": c.kind.value,
                "arrival_us": c.arrival_us,
                "completion_us": c.completion_us,
                "latency_us": c.latency_us,
                "energy_uj": c.energy_uj,
                "warning_count": c.warning_count,
            }
            for c in report.commands
        ],
        "latency_by_kind": [
            {
                "kind": s.kind.value,
                "count": s.count,
                "mean_us": s.mean_us,
                "min_us": s.min_us,
                "max_us": s.max_us,
                **{
                    f"p{p}_us": value
                    for p, value in zip(PERCENTILES, s.percentiles_us)
                },
            }
            for s in report.kind_stats
        ],
        "energy_by_event_kind": [
            {"kind": kind.value, "energy_uj": value}
            for kind, value in report.energy_by_kind
        ],
        "resources": [
            {
                "resource": u.resource.label,
                "busy_us": u.busy_us,
                "utilization": u.utilization,
                "idle_energy_uj": u.idle_energy_uj,
            }
            for u in report.usage
        ],
        "warning_counts": [
            {"rule": rule.value, "count": count}
            for rule, count in report.warning_counts
        ],
        "warnings": [
            {
                "rule": w.rule.value,
                "severity": w.severity.value,
                "message": w.message,
                "sequence_id": w.sequence_id,
                "line": w.line,
            }
            for w in report.warnings
        ],
    }
    if event_log:
        doc["events"] = [
            {
                "sequence_id": e.sequence_id,
                "event_id": e.event_id,
                "kind": e.kind.value,
                "target": e.target,
                "resource": e.resource,
                "start_us": e.start_us,
                "duration_us": e.duration_us,
                "energy_uj": e.energy_uj,
            }
            for e in report.events
        ]
    return json.dumps(doc, indent=2) + "\n"


def _emit_table(report: Report, event_log: bool) -> str:
    lines = [
        "flashsim report",
        "===============",
        f"commands: {report.command_count}   makespan: {report.makespan_us:.3f} us   "
        f"total energy: {report.total_energy_uj:.3f} uJ "
        f"(events {report.event_energy_uj:.3f} + idle {report.idle_energy_uj:.3f})",
    ]
    if report.kind_stats:
        lines += ["", "latency by command kind (us)"]
        header = f"{'kind':<24}{'count':>6}{'mean':>12}{'min':>12}{'max':>12}"
        header += "".join(f"{'p' + str(p):>12}" for p in PERCENTILES)
        lines.append(header)
        for s in report.kind_stats:
            row = f"{s.kind.value:<24}{s.count:>6}{s.mean_us:>12.3f}{s.min_us:>12.3f}{s.max_us:>12.3f}"
            row += "".join(f"{v:>12.3f}" for v in s.percentiles_us)
            lines.append(row)
    if report.energy_by_kind:
        lines += ["", "energy by event kind (uJ)"]
        for kind, value in report.energy_by_kind:
            lines.append(f"{kind.value:<24}{value:>12.3f}")
    if report.usage:
        lines += ["", "resource usage"]
        lines.append(f"{'resource':<24}{'busy us':>12}{'util':>8}{'idle uJ':>12}")
        for u in report.usage:
            lines.append(
                f"{u.resource.label:<24}{u.busy_us:>12.3f}{u.utilization:>8.3f}"
                f"{u.idle_energy_uj:>12.3f}"
            )
    if report.warning_counts:
        lines += ["", f"warnings ({len(report.warnings)})"]
        for rule, count in report.warning_counts:
            lines.append(f"{rule.value:<24}{count:>6}")
        for w in report.warnings:
            where = f"line {w.line}: " if w.line is not None else ""
            lines.append(f"  {where}{w.message} [{w.rule.value}]")
    if event_log:
        lines += ["", "event log (start us, duration us, kind, target, resource, energy uJ)"]
        for e in report.events:
            lines.append(
                f"{e.start_us:>12.3f}{e.duration_us:>12.3f}  {e.kind.value:<18}"
                f"{e.target:<16}{e.resource or '-':<16}{e.energy_uj:>10.3f}"
            )
    return "\n".join(lines) + "\n"
