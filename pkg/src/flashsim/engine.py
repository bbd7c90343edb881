"""Deterministic discrete-event core.

Scheduling discipline: every event starts at the earliest instant that is
>= its command's arrival, >= the end of each dependency, and >= the busy
horizon of its resource. Resources (planes, channel buses) are served
strictly FIFO in (command sequence_id, event id) order, with no reordering
across commands, so independent resources overlap freely while contended
ones serialize. Events ready at the same instant therefore start in
(sequence_id, event id) order, a documented total order that makes two runs
on identical inputs byte-identical.

Time is integer nanoseconds internally (trace microseconds scaled by 1000)
so schedules never diverge through float accumulation; energy is carried
as double-precision microjoules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .commands import (
    Command,
    CommandKind,
    EventKind,
    decompose,
    erased_blocks,
    validate,
    written_pages,
)
from .errors import Severity, TraceOrderError, ValidationFatal, Violation
from .models import EventContext, ModelSet
from .topology import Geometry, Resource, SubsystemState, validate_geometry
from .units import us_to_ns


@dataclass(frozen=True)
class Policy:
    """Run-wide switches, all defaulted to the permissive baseline."""

    strict: bool = False  # escalate warnings to fatal errors
    endurance_limit: int | None = None
    die_serialization: bool = False
    cmd_overhead_on_bus: bool = False
    initially_written: bool = False
    multi_plane_same_offsets: bool = True


@dataclass(frozen=True)
class ScheduledEvent:
    """One priced and placed event from the run's event log."""

    sequence_id: int
    event_id: int
    kind: EventKind
    target_label: str
    resource: Resource | None
    start_ns: int
    duration_ns: int
    energy_uj: float

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.duration_ns


@dataclass(frozen=True)
class CommandResult:
    sequence_id: int
    kind: CommandKind
    arrival_ns: int
    completion_ns: int
    energy_uj: float
    warnings: tuple[Violation, ...]

    @property
    def latency_ns(self) -> int:
        return self.completion_ns - self.arrival_ns


@dataclass
class RunResult:
    """Everything a run produced: per-command results, event log, warnings."""

    results: list[CommandResult]
    schedule: list[ScheduledEvent]
    warnings: list[Violation]
    first_arrival_ns: int
    last_end_ns: int

    @property
    def makespan_ns(self) -> int:
        # first arrival to last completion; zero for an empty run
        return max(0, self.last_end_ns - self.first_arrival_ns)


def effective_resource(resource: Resource | None, policy: Policy) -> Resource | None:
    """Map an event's natural resource to its scheduling unit.

    Die serialization coarsens every plane to its die, modeling chips that
    cannot run plane operations concurrently.
    """
    if resource is None:
        return None
    if policy.die_serialization and resource.kind == "plane":
        return Resource("die", resource.key[:3])
    return resource


def run(
    trace: Sequence[Command],
    geometry: Geometry,
    supported: frozenset[CommandKind],
    models: ModelSet,
    policy: Policy = Policy(),
) -> RunResult:
    """Simulate a validated, arrival-sorted command stream.

    Commands are processed in trace order; each one is validated, its state
    effects applied (flagging erase-before-write and endurance violations),
    and its event DAG placed on the timeline per the module's scheduling
    discipline. Structural validation errors abort the run; warnings abort
    only under a strict policy.
    """
    validate_geometry(geometry)
    _check_order(trace)
    state = SubsystemState(
        geometry,
        endurance_limit=policy.endurance_limit,
        initially_written=policy.initially_written,
    )

    busy_until: dict[Resource, int] = {}
    results: list[CommandResult] = []
    schedule: list[ScheduledEvent] = []
    all_warnings: list[Violation] = []
    last_end = 0

    for cmd in trace:
        violations = validate(
            cmd,
            geometry,
            supported,
            same_offsets=policy.multi_plane_same_offsets,
        )
        fatal = [v for v in violations if v.severity is Severity.ERROR]
        if fatal:
            raise ValidationFatal(fatal)

        warnings = list(violations)
        for addr in written_pages(cmd):
            warnings.extend(
                v.located(cmd.sequence_id, cmd.line) for v in state.write_page(addr)
            )
        for addr in erased_blocks(cmd):
            warnings.extend(
                v.located(cmd.sequence_id, cmd.line) for v in state.erase_block(addr)
            )
        if policy.strict and warnings:
            raise ValidationFatal(warnings)

        events = decompose(cmd, geometry, cmd_overhead_on_bus=policy.cmd_overhead_on_bus)
        ends: list[int] = []
        completion = cmd.arrival_ns
        energy_total = 0.0
        for event_id, event in enumerate(events):
            ready = cmd.arrival_ns
            for dep in event.depends_on:
                ready = max(ready, ends[dep])
            resource = effective_resource(event.resource, policy)
            if resource is None:
                start = ready
            else:
                start = max(ready, busy_until.get(resource, 0))
            ctx = EventContext.for_event(
                event.kind, event.target, event.byte_count, geometry
            )
            duration = us_to_ns(models.latency_us(ctx))
            energy = models.energy_uj(
                EventContext.for_event(
                    event.kind,
                    event.target,
                    event.byte_count,
                    geometry,
                    duration_us=duration / 1000,
                )
            )
            end = start + duration
            if resource is not None:
                busy_until[resource] = end
            ends.append(end)
            completion = max(completion, end)
            energy_total += energy
            schedule.append(
                ScheduledEvent(
                    cmd.sequence_id,
                    event_id,
                    event.kind,
                    str(event.target),
                    resource,
                    start,
                    duration,
                    energy,
                )
            )
        last_end = max(last_end, completion)
        all_warnings.extend(warnings)
        results.append(
            CommandResult(
                cmd.sequence_id,
                cmd.kind,
                cmd.arrival_ns,
                completion,
                energy_total,
                tuple(warnings),
            )
        )

    first_arrival = trace[0].arrival_ns if trace else 0
    return RunResult(results, schedule, all_warnings, first_arrival, last_end)


def all_resources(geometry: Geometry, policy: Policy = Policy()) -> list[Resource]:
    """Every scheduling resource the geometry defines, in sorted order."""
    out = [Resource("bus", (ch,)) for ch in range(geometry.channels)]
    for ch in range(geometry.channels):
        for chip in range(geometry.chips_per_channel):
            for die in range(geometry.dies_per_chip):
                if policy.die_serialization:
                    out.append(Resource("die", (ch, chip, die)))
                else:
                    out.extend(
                        Resource("plane", (ch, chip, die, plane))
                        for plane in range(geometry.planes_per_die)
                    )
    return sorted(out)


def busy_time_ns(schedule: Iterable[ScheduledEvent]) -> dict[Resource, int]:
    """Total occupied nanoseconds per resource (exclusivity makes sums exact)."""
    busy: dict[Resource, int] = {}
    for ev in schedule:
        if ev.resource is not None:
            busy[ev.resource] = busy.get(ev.resource, 0) + ev.duration_ns
    return busy


def idle_accounting(
    run_result: RunResult,
    geometry: Geometry,
    models: ModelSet,
    policy: Policy = Policy(),
) -> dict[Resource, float]:
    """Idle energy per resource: idle power x (makespan - busy time), uJ.

    Covers every resource the geometry defines, including ones the trace
    never touched; all zeros when no idle power is configured.
    """
    makespan_us = run_result.makespan_ns / 1000
    busy = busy_time_ns(run_result.schedule)
    out: dict[Resource, float] = {}
    for resource in all_resources(geometry, policy):
        idle_us = makespan_us - busy.get(resource, 0) / 1000
        out[resource] = models.idle_power_mw(resource.kind) * idle_us / 1000
    return out


def _check_order(trace: Sequence[Command]) -> None:
    for prev, cur in zip(trace, trace[1:]):
        if cur.arrival_ns < prev.arrival_ns or (
            cur.arrival_ns == prev.arrival_ns and cur.sequence_id <= prev.sequence_id
        ):
            raise TraceOrderError(
                f"commands {prev.sequence_id} and {cur.sequence_id} are not in "
                "(arrival, sequence) order"
            )
