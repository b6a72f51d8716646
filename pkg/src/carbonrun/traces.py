"""Replay recorded energy counter traces instead of live sysfs reads.

Trace files are CSV with rows `timestamp_s,domain_id,energy_uj,max_range_uj`.
Rows sharing a timestamp form one instant (a snapshot of every domain); each
instant must cover the same domain set and timestamps must strictly increase.
An optional header row is tolerated.
"""

from __future__ import annotations

import csv
import io

from .meter import EnergyCounterReading


class TraceError(Exception):
    """The trace file is malformed."""


class TraceSource:
    """Drop-in counter source that serves pre-recorded instants.

    Runs in virtual time: `next_instant` returns the next recorded snapshot
    immediately and None once the trace is exhausted.  `span_s` is the time
    covered by the recording and stands in for wall-clock duration.
    """

    virtual_time = True

    def __init__(self, instants: list[dict[str, EnergyCounterReading]]):
        if len(instants) < 2:
            raise TraceError("trace needs at least two instants to form a sample")
        self._instants = instants
        self._cursor = 0
        first = next(iter(instants[0].values()))
        last = next(iter(instants[-1].values()))
        self.span_s = last.timestamp - first.timestamp

    @classmethod
    def from_csv(cls, text: str) -> "TraceSource":
        return cls(parse_trace(text))

    @classmethod
    def from_file(cls, path: str) -> "TraceSource":
        with open(path) as fh:
            return cls(parse_trace(fh.read()))

    @property
    def domain_ids(self) -> list[str]:
        return sorted(self._instants[0])

    def next_instant(self) -> dict[str, EnergyCounterReading] | None:
        if self._cursor >= len(self._instants):
            return None
        instant = self._instants[self._cursor]
        self._cursor += 1
        return instant


def parse_trace(text: str) -> list[dict[str, EnergyCounterReading]]:
    instants: list[dict[str, EnergyCounterReading]] = []
    current: dict[str, EnergyCounterReading] = {}
    current_ts = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if lineno == 1 and row[0].strip().lower().startswith("timestamp"):
            continue
        if len(row) != 4:
            raise TraceError(f"line {lineno}: expected 4 fields, got {len(row)}")
        try:
            ts = float(row[0])
            energy = int(row[2])
            max_range = int(row[3])
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
        domain = row[1].strip()
        if energy < 0 or max_range <= 0:
            raise TraceError(f"line {lineno}: counter values out of range")
        if current_ts is None or ts != current_ts:
            if current_ts is not None:
                if ts < current_ts:
                    raise TraceError(
                        f"line {lineno}: timestamps must not decrease"
                    )
                instants.append(current)
            current = {}
            current_ts = ts
        if domain in current:
            raise TraceError(f"line {lineno}: domain {domain} repeated at {ts}")
        current[domain] = EnergyCounterReading(domain, energy, max_range, ts)
    if current:
        instants.append(current)
    if len(instants) < 2:
        raise TraceError("trace needs at least two instants to form a sample")
    domains = set(instants[0])
    for i, instant in enumerate(instants):
        if set(instant) != domains:
            raise TraceError(f"instant {i} does not cover domains {sorted(domains)}")
    return instants
