"""Import of whitespace-separated legacy simulator traces.

Only a small, common subset of the old wireless trace format is understood::

    s 0.500000 _3_ AGT --- 12 cbr 512
    r 0.512000 _5_ AGT --- 12 cbr 512

i.e. event char, time, ``_<node>_``, layer tag, reason ``---``, packet id,
packet type and size in bytes. Anything else is skipped and counted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import TraceFormatError
from .netsim.flows import Event, Trace, TraceRecord

__all__ = ["LegacyImport", "parse_legacy_lines", "import_legacy_trace", "LEGACY_FLOW_ID"]

LEGACY_FLOW_ID = -1  # the legacy subset carries no flow identity

_EVENTS = {"s": Event.SEND, "r": Event.RECEIVE, "d": Event.DROP, "f": Event.FORWARD}
_LINE = re.compile(
    r"^(?P<ev>[srdf])\s+(?P<t>\d+(?:\.\d*)?|\.\d+)\s+_(?P<node>\d+)_\s+(?:AGT|RTR|MAC)\s+---\s+"
    r"(?P<pid>\d+)\s+\S+\s+(?P<size>\d+)\s*$"
)


@dataclass
class LegacyImport:
    records: list[TraceRecord] = field(default_factory=list)
    lines: int = 0
    skipped: int = 0
    missing_origin: int = 0  # records whose packet had no earlier send

    @property
    def trace(self) -> Trace:
        return Trace.from_records(self.records)


def parse_legacy_lines(lines) -> LegacyImport:
    """Parse an iterable of text lines; see :func:`import_legacy_trace`."""
    out = LegacyImport()
    parsed = []
    for raw in lines:
        out.lines += 1
        m = _LINE.match(raw.strip())
        if m is None:
            out.skipped += 1
            continue
        parsed.append((_EVENTS[m["ev"]], float(m["t"]), int(m["node"]), int(m["pid"]), int(m["size"])))

    # origin is the earliest send of each packet id, wherever it appears in the file
    origin: dict[int, float] = {}
    for ev, t, _, pid, _ in parsed:
        if ev is Event.SEND and (pid not in origin or t < origin[pid]):
            origin[pid] = t
    for ev, t, node, pid, size in parsed:
        if pid in origin:
            o = origin[pid]
        else:
            o = t
            out.missing_origin += 1
        out.records.append(TraceRecord(ev, t, node, pid, size, LEGACY_FLOW_ID, o))

    if out.lines and out.skipped * 2 > out.lines:
        raise TraceFormatError(f"{out.skipped} of {out.lines} lines are not legacy trace records")
    return out


def import_legacy_trace(path: str | Path) -> LegacyImport:
    """Read a legacy trace file.

    Blank, comment and malformed lines are skipped and counted; more than half
    skipped is a :class:`TraceFormatError`. Unreadable files raise ``OSError``.
    """
    with open(path, encoding="utf-8", errors="replace") as fh:
        return parse_legacy_lines(fh)
