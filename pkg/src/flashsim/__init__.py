"""Trace-driven latency and energy simulator for NAND flash storage subsystems."""

from .commands import (
    Command,
    CommandKind,
    EventKind,
    FlashEvent,
    decompose,
    validate,
)
from .engine import (
    CommandResult,
    Policy,
    RunResult,
    ScheduledEvent,
    idle_accounting,
    run,
)
from .errors import (
    FlashSimError,
    Rule,
    Severity,
    TraceParseError,
    ValidationFatal,
    Violation,
)
from .expr import Expression, parse_expression
from .models import (
    EventContext,
    ModelSet,
    PowerParams,
    TimingParams,
)
from .stats import Report, build_report, emit
from .topology import (
    FlashAddress,
    Geometry,
    PageState,
    Resource,
    SubsystemState,
    decode,
    encode,
    validate_geometry,
)
from .trace_io import Config, emit_trace, parse_config, parse_trace

__version__ = "0.1.0"

__all__ = [
    "Command",
    "CommandKind",
    "CommandResult",
    "Config",
    "EventContext",
    "EventKind",
    "Expression",
    "FlashAddress",
    "FlashEvent",
    "FlashSimError",
    "Geometry",
    "ModelSet",
    "PageState",
    "Policy",
    "PowerParams",
    "Report",
    "Resource",
    "Rule",
    "RunResult",
    "ScheduledEvent",
    "Severity",
    "SubsystemState",
    "TimingParams",
    "TraceParseError",
    "ValidationFatal",
    "Violation",
    "build_report",
    "decode",
    "decompose",
    "emit",
    "emit_trace",
    "encode",
    "idle_accounting",
    "parse_config",
    "parse_expression",
    "parse_trace",
    "run",
    "validate",
    "validate_geometry",
]
