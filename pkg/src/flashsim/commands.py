"""Functional model: command taxonomy, validation, event decomposition.

Every command breaks down into a small DAG of primitive hardware events
(command issue overhead, array sense/program, block erase, bus transfers,
page-buffer copies). Events are the unit the timing and power models price
and the engine schedules. Everything here is pure: same command and
geometry in, same event DAG out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import Rule, Severity, Violation
from .topology import (
    FlashAddress,
    Geometry,
    Resource,
    SubsystemState,
    bus_resource,
    plane_resource,
)


class CommandKind(Enum):
    READ = "read"
    WRITE = "write"
    ERASE = "erase"
    COPY_BACK = "copy_back"
    CACHE_READ = "cache_read"
    CACHE_WRITE = "cache_write"
    MULTI_PLANE_READ = "multi_plane_read"
    MULTI_PLANE_WRITE = "multi_plane_write"
    MULTI_PLANE_ERASE = "multi_plane_erase"
    INTERLEAVED_READ = "interleaved_read"
    INTERLEAVED_WRITE = "interleaved_write"
    INTERLEAVED_ERASE = "interleaved_erase"
    MULTI_PLANE_COPY_BACK = "multi_plane_copy_back"


LEGACY_KINDS = frozenset(
    {CommandKind.READ, CommandKind.WRITE, CommandKind.ERASE}
)
MULTI_PLANE_KINDS = frozenset(
    {
        CommandKind.MULTI_PLANE_READ,
        CommandKind.MULTI_PLANE_WRITE,
        CommandKind.MULTI_PLANE_ERASE,
    }
)
INTERLEAVED_KINDS = frozenset(
    {
        CommandKind.INTERLEAVED_READ,
        CommandKind.INTERLEAVED_WRITE,
        CommandKind.INTERLEAVED_ERASE,
    }
)
CACHE_KINDS = frozenset({CommandKind.CACHE_READ, CommandKind.CACHE_WRITE})
PAIRED_KINDS = frozenset(
    {CommandKind.COPY_BACK, CommandKind.MULTI_PLANE_COPY_BACK}
)


class EventKind(Enum):
    CMD_OVERHEAD = "cmd_overhead"
    ARRAY_SENSE = "array_sense"
    ARRAY_PROGRAM = "array_program"
    BLOCK_ERASE = "block_erase"
    BUS_TRANSFER_IN = "bus_transfer_in"
    BUS_TRANSFER_OUT = "bus_transfer_out"
    BUFFER_COPY = "buffer_copy"


# Events that run inside a plane's array vs. on the shared channel bus.
PLANE_EVENTS = frozenset(
    {
        EventKind.ARRAY_SENSE,
        EventKind.ARRAY_PROGRAM,
        EventKind.BLOCK_ERASE,
        EventKind.BUFFER_COPY,
    }
)
BUS_EVENTS = frozenset({EventKind.BUS_TRANSFER_IN, EventKind.BUS_TRANSFER_OUT})


@dataclass(frozen=True)
class Command:
    """One trace entry.

    `operands` is interpreted per kind: a single page for read/write/erase
    and the cache ops (which add `page_count` consecutive pages), a
    (source, destination) pair for copy_back, alternating source/destination
    pairs for multi_plane_copy_back, and one address per plane (or die) for
    the multi-plane and interleaved families. `arrival_ns` is on the
    engine's integer-nanosecond timebase.
    """

    arrival_ns: int
    kind: CommandKind
    operands: tuple[FlashAddress, ...]
    page_count: int = 1
    sequence_id: int = 0
    line: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.arrival_ns < 0:
            raise ValueError("arrival time must be >= 0")
        n = len(self.operands)
        if self.kind in LEGACY_KINDS or self.kind in CACHE_KINDS:
            if n != 1:
                raise ValueError(f"{self.kind.value} takes exactly 1 operand, got {n}")
        elif self.kind is CommandKind.COPY_BACK:
            if n != 2:
                raise ValueError(f"copy_back takes exactly 2 operands, got {n}")
        elif self.kind is CommandKind.MULTI_PLANE_COPY_BACK:
            if n < 2 or n % 2 != 0:
                raise ValueError(
                    f"multi_plane_copy_back takes source/destination pairs, got {n} operands"
                )
        elif n < 1:
            raise ValueError(f"{self.kind.value} needs at least 1 operand")
        if self.kind in CACHE_KINDS:
            if self.page_count < 1:
                raise ValueError(f"page_count must be >= 1, got {self.page_count}")
        elif self.page_count != 1:
            raise ValueError(f"{self.kind.value} does not take a page count")

    @property
    def arrival_us(self) -> float:
        return self.arrival_ns / 1000

    def pairs(self) -> tuple[tuple[FlashAddress, FlashAddress], ...]:
        """(source, destination) pairs for the copy-back kinds."""
        ops = self.operands
        return tuple((ops[i], ops[i + 1]) for i in range(0, len(ops), 2))


@dataclass(frozen=True)
class FlashEvent:
    """A primitive hardware activity within one command's decomposition.

    `depends_on` references earlier event ids (list positions) of the same
    command, so any decomposition is emitted in topological order. `resource`
    names the single unit the event occupies: the target's plane for array
    and buffer events, the target's channel bus for transfers, and nothing
    for command overhead unless the policy binds overhead to the bus.
    """

    kind: EventKind
    target: FlashAddress
    byte_count: int
    resource: Resource | None
    depends_on: frozenset[int]


def validate(
    cmd: Command,
    geometry: Geometry,
    supported: frozenset[CommandKind],
    state: SubsystemState | None = None,
    same_offsets: bool = True,
) -> list[Violation]:
    """Check one command, returning every violation found.

    Checks run in a fixed order and stop at the first error-severity
    finding: supported kind, operand address ranges, then the kind-specific
    structural rules. Structural impossibilities (cross-plane copy-back,
    repeated planes or dies, cache extents past the block end) are errors;
    device-constraint violations (copy-back page parity, and with `state`
    given, erase-before-write) are warnings that a strict policy may
    escalate. Die-interleaving requires only distinct dies of one chip; no
    offset rule is imposed across dies. `same_offsets` enforces identical
    (block, page) offsets across multi-plane operands and can be switched
    off for chips without that restriction.
    """
    out: list[Violation] = []

    if cmd.kind not in supported:
        out.append(
            _error(
                Rule.UNSUPPORTED_COMMAND,
                f"command kind '{cmd.kind.value}' is not in the supported set",
                cmd,
            )
        )
        return out

    for addr in cmd.operands:
        if not addr.in_bounds(geometry):
            out.append(
                _error(
                    Rule.ADDRESS_RANGE,
                    f"address {addr} out of range for geometry {geometry.counts()}",
                    cmd,
                )
            )
            return out

    structural = _structural_rules(cmd, geometry, same_offsets)
    out.extend(v.located(cmd.sequence_id, cmd.line) for v in structural)
    if any(v.severity is Severity.ERROR for v in out):
        return out

    if state is not None:
        for addr in written_pages(cmd):
            if state.page_state(addr).value == "written":
                out.append(
                    Violation(
                        Rule.ERASE_BEFORE_WRITE,
                        Severity.WARNING,
                        f"page {addr} written again without an intervening erase",
                        cmd.sequence_id,
                        cmd.line,
                    )
                )
    return out


def _structural_rules(
    cmd: Command, geometry: Geometry, same_offsets: bool
) -> list[Violation]:
    kind = cmd.kind
    if kind is CommandKind.COPY_BACK:
        return _copy_back_rules(cmd.pairs())
    if kind is CommandKind.MULTI_PLANE_COPY_BACK:
        out = _copy_back_rules(cmd.pairs())
        out.extend(
            _multi_plane_rules([src for src, _ in cmd.pairs()], same_offsets, "source")
        )
        if same_offsets:
            out.extend(_offset_rule([dst for _, dst in cmd.pairs()], "destination"))
        return out
    if kind in MULTI_PLANE_KINDS:
        return _multi_plane_rules(list(cmd.operands), same_offsets, "operand")
    if kind in INTERLEAVED_KINDS:
        return _interleave_rules(cmd.operands)
    if kind in CACHE_KINDS:
        start = cmd.operands[0]
        if start.page + cmd.page_count > geometry.pages_per_block:
            return [
                Violation(
                    Rule.CACHE_EXTENT,
                    Severity.ERROR,
                    f"cache extent of {cmd.page_count} pages from page {start.page} "
                    f"runs past the block end ({geometry.pages_per_block} pages)",
                )
            ]
    return []


def _copy_back_rules(
    pairs: Iterable[tuple[FlashAddress, FlashAddress]]
) -> list[Violation]:
    out = []
    for src, dst in pairs:
        if src.plane_key() != dst.plane_key():
            out.append(
                Violation(
                    Rule.COPY_BACK_CROSS_PLANE,
                    Severity.ERROR,
                    f"copy-back source {src} and destination {dst} are in different planes",
                )
            )
        elif src.page % 2 != dst.page % 2:
            out.append(
                Violation(
                    Rule.COPY_BACK_PARITY,
                    Severity.WARNING,
                    f"copy-back page indices {src.page} and {dst.page} must be "
                    "both odd or both even",
                )
            )
    return out


def _multi_plane_rules(
    addrs: Sequence[FlashAddress], same_offsets: bool, role: str
) -> list[Violation]:
    out = []
    dies = {a.die_key() for a in addrs}
    if len(dies) > 1:
        out.append(
            Violation(
                Rule.MULTI_PLANE_SHAPE,
                Severity.ERROR,
                f"multi-plane {role}s span {len(dies)} dies; all must target one die",
            )
        )
    planes = [a.plane_key() for a in addrs]
    if len(set(planes)) != len(planes):
        out.append(
            Violation(
                Rule.MULTI_PLANE_SHAPE,
                Severity.ERROR,
                f"multi-plane {role}s repeat a plane; planes must be distinct",
            )
        )
    if same_offsets and not out:
        out.extend(_offset_rule(addrs, role))
    return out


def _offset_rule(addrs: Sequence[FlashAddress], role: str) -> list[Violation]:
    offsets = {(a.block, a.page) for a in addrs}
    if len(offsets) > 1:
        return [
            Violation(
                Rule.MULTI_PLANE_SHAPE,
                Severity.ERROR,
                f"multi-plane {role}s must share one (block, page) offset, "
                f"got {sorted(offsets)}",
            )
        ]
    return []


def _interleave_rules(addrs: Sequence[FlashAddress]) -> list[Violation]:
    out = []
    chips = {a.chip_key() for a in addrs}
    if len(chips) > 1:
        out.append(
            Violation(
                Rule.INTERLEAVE_SHAPE,
                Severity.ERROR,
                f"interleaved operands span {len(chips)} chips; all must target one chip",
            )
        )
    dies = [a.die_key() for a in addrs]
    if len(set(dies)) != len(dies):
        out.append(
            Violation(
                Rule.INTERLEAVE_SHAPE,
                Severity.ERROR,
                "interleaved operands repeat a die; dies must be distinct",
            )
        )
    return out


def written_pages(cmd: Command) -> tuple[FlashAddress, ...]:
    """Pages a command programs, in operand order (empty for reads/erases)."""
    kind = cmd.kind
    if kind is CommandKind.WRITE:
        return cmd.operands
    if kind is CommandKind.CACHE_WRITE:
        return _extent_pages(cmd)
    if kind in (CommandKind.MULTI_PLANE_WRITE, CommandKind.INTERLEAVED_WRITE):
        return cmd.operands
    if kind in PAIRED_KINDS:
        return tuple(dst for _, dst in cmd.pairs())
    return ()


def erased_blocks(cmd: Command) -> tuple[FlashAddress, ...]:
    """Block-identifying addresses a command erases (empty for the rest)."""
    if cmd.kind in (
        CommandKind.ERASE,
        CommandKind.MULTI_PLANE_ERASE,
        CommandKind.INTERLEAVED_ERASE,
    ):
        return cmd.operands
    return ()


def _extent_pages(cmd: Command) -> tuple[FlashAddress, ...]:
    start = cmd.operands[0]
    return tuple(
        FlashAddress(
            start.channel, start.chip, start.die, start.plane, start.block, start.page + i
        )
        for i in range(cmd.page_count)
    )


def decompose(
    cmd: Command, geometry: Geometry, cmd_overhead_on_bus: bool = False
) -> list[FlashEvent]:
    """Break a validated command into its ordered event DAG.

    Shapes:
      read        overhead -> sense -> transfer out
      write       overhead -> transfer in -> program
      erase       overhead -> block erase
      copy_back   overhead -> sense(src) -> buffer copy -> program(dst),
                  a linear chain with no bus transfer
      cache_read  one overhead, then per page i: sense(i+1) depends only on
                  sense(i), transfer(i) depends on sense(i) and transfer(i-1),
                  pipelining array access against the bus; cache_write is the
                  mirror image (transfer chain feeding programs)
      multi-plane / interleaved families: one shared overhead plus per-plane
                  (per-die) copies of the legacy shape; array events are
                  mutually independent, transfers contend on the channel bus
      multi_plane_copy_back: per-plane copy-back chains off one overhead

    Event ids are list positions; the dependency sets only reference earlier
    positions. Identical (cmd, geometry) always yields an identical list.
    """
    first = cmd.operands[0]
    events = [
        FlashEvent(
            EventKind.CMD_OVERHEAD,
            first,
            0,
            resource=bus_resource(first) if cmd_overhead_on_bus else None,
            depends_on=frozenset(),
        )
    ]
    overhead = 0
    page_size = geometry.page_size
    kind = cmd.kind

    def emit(event_kind: EventKind, target: FlashAddress, *deps: int) -> int:
        if event_kind in BUS_EVENTS:
            byte_count, resource = page_size, bus_resource(target)
        else:
            byte_count, resource = 0, plane_resource(target)
        events.append(
            FlashEvent(
                event_kind,
                target,
                byte_count,
                resource=resource,
                depends_on=frozenset(deps),
            )
        )
        return len(events) - 1

    if kind is CommandKind.READ:
        sense = emit(EventKind.ARRAY_SENSE, first, overhead)
        emit(EventKind.BUS_TRANSFER_OUT, first, sense)
    elif kind is CommandKind.WRITE:
        xfer = emit(EventKind.BUS_TRANSFER_IN, first, overhead)
        emit(EventKind.ARRAY_PROGRAM, first, xfer)
    elif kind is CommandKind.ERASE:
        emit(EventKind.BLOCK_ERASE, first, overhead)
    elif kind in PAIRED_KINDS:
        for src, dst in cmd.pairs():
            sense = emit(EventKind.ARRAY_SENSE, src, overhead)
            copy = emit(EventKind.BUFFER_COPY, src, sense)
            emit(EventKind.ARRAY_PROGRAM, dst, copy)
    elif kind is CommandKind.CACHE_READ:
        prev_sense = prev_xfer = None
        for page in _extent_pages(cmd):
            sense = emit(
                EventKind.ARRAY_SENSE,
                page,
                overhead if prev_sense is None else prev_sense,
            )
            xfer_deps = (sense,) if prev_xfer is None else (sense, prev_xfer)
            prev_xfer = emit(EventKind.BUS_TRANSFER_OUT, page, *xfer_deps)
            prev_sense = sense
    elif kind is CommandKind.CACHE_WRITE:
        prev_xfer = prev_prog = None
        for page in _extent_pages(cmd):
            xfer = emit(
                EventKind.BUS_TRANSFER_IN,
                page,
                overhead if prev_xfer is None else prev_xfer,
            )
            prog_deps = (xfer,) if prev_prog is None else (xfer, prev_prog)
            prev_prog = emit(EventKind.ARRAY_PROGRAM, page, *prog_deps)
            prev_xfer = xfer
    elif kind in (CommandKind.MULTI_PLANE_READ, CommandKind.INTERLEAVED_READ):
        for addr in cmd.operands:
            sense = emit(EventKind.ARRAY_SENSE, addr, overhead)
            emit(EventKind.BUS_TRANSFER_OUT, addr, sense)
    elif kind in (CommandKind.MULTI_PLANE_WRITE, CommandKind.INTERLEAVED_WRITE):
        for addr in cmd.operands:
            xfer = emit(EventKind.BUS_TRANSFER_IN, addr, overhead)
            emit(EventKind.ARRAY_PROGRAM, addr, xfer)
    elif kind in (CommandKind.MULTI_PLANE_ERASE, CommandKind.INTERLEAVED_ERASE):
        for addr in cmd.operands:
            emit(EventKind.BLOCK_ERASE, addr, overhead)
    else:  # pragma: no cover - kinds are exhaustive
        raise AssertionError(f"unhandled command kind {kind}")
    return events


def _error(rule: Rule, message: str, cmd: Command) -> Violation:
    return Violation(rule, Severity.ERROR, message, cmd.sequence_id, cmd.line)
