"""Structured run traces: in-memory event records, JSONL output and a
deterministic content hash."""
from __future__ import annotations

import hashlib
import json
from typing import Iterable, Optional


class TraceRecorder:
    """Append-only event log.  Events are plain dicts; `t` (sim time) and
    `i` (event index) are filled in by the recorder."""

    def __init__(self, clock=None):
        self.events: list = []
        self.clock = clock or (lambda: 0)

    def emit(self, ev: str, **fields):
        rec = {"i": len(self.events), "t": self.clock(), "ev": ev}
        rec.update(fields)
        self.events.append(rec)
        return rec

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)


def event_lines(events: Iterable[dict]) -> Iterable[str]:
    for rec in events:
        yield json.dumps(rec, sort_keys=True, separators=(",", ":"))


def write_jsonl(events: Iterable[dict], path: str):
    with open(path, "w") as fh:
        for line in event_lines(events):
            fh.write(line + "\n")


def read_jsonl(path: str) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def trace_hash(events: Iterable[dict]) -> str:
    h = hashlib.sha256()
    for line in event_lines(events):
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()
