"""CPU package energy metering via the Linux powercap counters.

The kernel exposes monotonically increasing energy counters (microjoules)
under /sys/class/powercap/intel-rapl.  Power is the first difference of two
counter reads divided by the elapsed time.  Counters wrap at
max_energy_range_uj; a wrapped pair is discarded rather than reconstructed,
because the counter may have wrapped more than once between reads.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass
from statistics import fmean

POWERCAP_ROOT = "/sys/class/powercap/intel-rapl"
UJ_PER_J = 1_000_000
KWH_PER_J = 1.0 / 3_600_000.0

GPU_QUERY = [
    "nvidia-smi",
    "--query-gpu=power.draw",
    "--format=csv,noheader,nounits",
]

# Counter files update on a millisecond-ish cadence; sampling much faster
# than this just reads the same value twice and produces zero/noise deltas.
MIN_SAMPLE_INTERVAL_S = 0.01

_DOMAIN_DIR = re.compile(r"intel-rapl:\d+$")


class NoPowercapInterface(Exception):
    """The host does not expose any readable package energy counters."""


class ReadFailure(Exception):
    """An energy counter file existed at setup time but could not be read."""

    def __init__(self, path: str, cause: Exception):
        super().__init__(f"cannot read {path}: {cause}")
        self.path = path


class EmptyProcessSamples(Exception):
    """The measured process exited before a single power sample completed."""


@dataclass(frozen=True)
class EnergyCounterReading:
    domain_id: str
    energy_uj: int
    max_range_uj: int
    timestamp: float  # seconds, monotonic or trace time


@dataclass(frozen=True)
class PowerSample:
    watts: float
    interval_s: float
    source: str = "cpu"  # "cpu" or "gpu"

    def __post_init__(self):
        if self.watts < 0:
            raise ValueError(f"negative power sample: {self.watts}")
        if self.interval_s <= 0:
            raise ValueError(f"non-positive sample interval: {self.interval_s}")


@dataclass(frozen=True)
class MeterConfig:
    sample_interval_s: float = 0.1
    psu_efficiency: float = 0.8
    baseline_duration_s: float = 5.0
    gpu_enabled: bool = False

    def __post_init__(self):
        if not 0.0 < self.psu_efficiency <= 1.0:
            raise ValueError(
                f"psu_efficiency must be in (0, 1], got {self.psu_efficiency}"
            )
        if self.sample_interval_s < MIN_SAMPLE_INTERVAL_S:
            raise ValueError(
                f"sample interval {self.sample_interval_s}s is below the "
                f"{MIN_SAMPLE_INTERVAL_S}s counter update granularity"
            )
        if self.baseline_duration_s < 0:
            raise ValueError("baseline duration cannot be negative")


@dataclass(frozen=True)
class MeasurementSummary:
    baseline_watts: float
    total_watts: float
    process_watts: float
    duration_s: float
    measured_kwh: float
    adjusted_kwh: float
    psu_efficiency: float
    negative_clamped: bool = False


def _read_int(path: str) -> int:
    try:
        with open(path) as fh:
            return int(fh.read().strip())
    except (OSError, ValueError) as exc:
        raise ReadFailure(path, exc) from None


def enumerate_package_domains(root: str = POWERCAP_ROOT) -> list[str]:
    """Return paths of top-level package power domains under *root*.

    Only whole-package domains count: directories named intel-rapl:<N>
    whose `name` file starts with "package-".  Subdomains such as core or
    dram (intel-rapl:<N>:<M>) are children of a package and would be
    double-counted, so they are never enumerated.

    Raises NoPowercapInterface when the hierarchy is absent or holds no
    readable package domain.
    """
    if not os.path.isdir(root):
        raise NoPowercapInterface(
            f"{root} does not exist; this kernel exposes no energy counters"
        )
    domains = []
    for entry in sorted(os.listdir(root)):
        if not _DOMAIN_DIR.match(entry):
            continue
        path = os.path.join(root, entry)
        try:
            with open(os.path.join(path, "name")) as fh:
                name = fh.read().strip()
        except OSError:
            continue
        if name.startswith("package-"):
            domains.append(path)
    if not domains:
        raise NoPowercapInterface(f"no package-* domains found under {root}")
    return domains


def read_counter(domain_path: str) -> EnergyCounterReading:
    """Read one domain's cumulative energy counter (microjoules)."""
    timestamp = time.monotonic()
    energy = _read_int(os.path.join(domain_path, "energy_uj"))
    max_range = _read_int(os.path.join(domain_path, "max_energy_range_uj"))
    return EnergyCounterReading(domain_path, energy, max_range, timestamp)


def power_from_readings(
    first: EnergyCounterReading, second: EnergyCounterReading
) -> PowerSample | None:
    """Average power over the interval between two reads of one domain.

    Returns None when the counter wrapped (energy delta is negative): the
    wrap count between reads is unknowable, so the pair is discarded.
    """
    if second.timestamp <= first.timestamp:
        raise ValueError("readings must be in increasing time order")
    delta_uj = second.energy_uj - first.energy_uj
    if delta_uj < 0:
        return None
    interval = second.timestamp - first.timestamp
    return PowerSample(watts=delta_uj / UJ_PER_J / interval, interval_s=interval)


def read_gpu_power(
    interval_s: float = 1.0, command: list[str] | None = None
) -> PowerSample | None:
    """Sum instantaneous GPU board power across all GPUs, or None.

    Any failure (driver missing, tool absent, unparseable output) means the
    GPU contribution is simply unavailable; it never aborts a measurement.
    """
    cmd = command or GPU_QUERY
    if shutil.which(cmd[0]) is None:
        return None
    try:
        proc = subprocess.run(
            cmd, capture_output=True, text=True, timeout=2.0, check=False
        )
    except (OSError, subprocess.TimeoutExpired):
        return None
    if proc.returncode != 0:
        return None
    total = 0.0
    seen = False
    for line in proc.stdout.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            total += float(line)
        except ValueError:
            return None
        seen = True
    if not seen or total < 0:
        return None
    return PowerSample(watts=total, interval_s=interval_s, source="gpu")


class PowercapSource:
    """Live counter source reading every package domain per instant."""

    virtual_time = False

    def __init__(self, root: str = POWERCAP_ROOT):
        self._domains = enumerate_package_domains(root)

    @property
    def domain_ids(self) -> list[str]:
        return list(self._domains)

    def next_instant(self) -> dict[str, EnergyCounterReading] | None:
        return {d: read_counter(d) for d in self._domains}


def combine_instants(
    instants: list[dict[str, EnergyCounterReading]],
    gpu_watts: list[float] | None = None,
) -> list[PowerSample]:
    """Turn consecutive whole-machine counter snapshots into power samples.

    Each adjacent pair of instants yields one sample whose watts are the sum
    over domains.  If any domain wrapped within the pair, the entire instant
    pair is dropped: a partial sum would understate machine power.  GPU watts,
    when polled, are indexed by leading instant and added to the CPU sum.
    """
    samples = []
    for i in range(len(instants) - 1):
        prev, cur = instants[i], instants[i + 1]
        watts = 0.0
        intervals = []
        wrapped = False
        for domain_id, first in prev.items():
            second = cur.get(domain_id)
            if second is None:
                wrapped = True  # domain vanished mid-run; treat like a wrap
                break
            sample = power_from_readings(first, second)
            if sample is None:
                wrapped = True
                break
            watts += sample.watts
            intervals.append(sample.interval_s)
        if wrapped or not intervals:
            continue
        if gpu_watts is not None:
            watts += gpu_watts[i]
        samples.append(PowerSample(watts=watts, interval_s=fmean(intervals)))
    return samples


class SamplingSession:
    """Background sampler that polls a counter source until stopped.

    For a live source the loop sleeps `sample_interval_s` between instants
    and takes one final instant when stopped, so short-lived processes still
    get a trailing partial sample.  For a trace source the loop consumes the
    whole trace immediately (virtual time needs no sleeping).
    """

    def __init__(self, source, config: MeterConfig):
        self._source = source
        self._config = config
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._instants: list[dict[str, EnergyCounterReading]] = []
        self._gpu: list[float] = []

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> list[PowerSample]:
        self._stop.set()
        self._thread.join()
        gpu = self._gpu if self._config.gpu_enabled else None
        return combine_instants(self._instants, gpu)

    def _poll_once(self) -> bool:
        instant = self._source.next_instant()
        if instant is None:
            return False
        self._instants.append(instant)
        if self._config.gpu_enabled:
            sample = read_gpu_power(interval_s=self._config.sample_interval_s)
            self._gpu.append(sample.watts if sample else 0.0)
        return True

    def _run(self) -> None:
        if self._source.virtual_time:
            while self._poll_once():
                pass
            return
        self._poll_once()
        while not self._stop.wait(self._config.sample_interval_s):
            if not self._poll_once():
                return
        self._poll_once()  # trailing read covers the last partial interval


def collect_baseline(source, config: MeterConfig) -> list[PowerSample]:
    """Sample idle power for `baseline_duration_s` before the process starts."""
    if config.baseline_duration_s == 0:
        return []
    instants = []
    deadline = time.monotonic() + config.baseline_duration_s
    instant = source.next_instant()
    if instant is not None:
        instants.append(instant)
    while time.monotonic() < deadline:
        time.sleep(config.sample_interval_s)
        instant = source.next_instant()
        if instant is None:
            break
        instants.append(instant)
    return combine_instants(instants)


def summarize(
    baseline: list[PowerSample],
    process: list[PowerSample],
    duration_s: float,
    config: MeterConfig,
) -> MeasurementSummary:
    """Reduce two sample streams to the quantities the report needs.

    Process power is mean total power minus mean baseline power, clamped at
    zero (noise can push the difference negative for near-idle workloads;
    the clamp is flagged so the report can say so).  Energy is power times
    wall duration, and the wall-plug figure divides by PSU efficiency since
    the counters sit downstream of the power supply.
    """
    if duration_s <= 0:
        raise ValueError(f"non-positive duration: {duration_s}")
    if not process:
        raise EmptyProcessSamples(
            "process exited before one full sampling interval; "
            "nothing to report (try a smaller --interval)"
        )
    baseline_watts = fmean(s.watts for s in baseline) if baseline else 0.0
    total_watts = fmean(s.watts for s in process)
    raw = total_watts - baseline_watts
    process_watts = max(raw, 0.0)
    measured_kwh = process_watts * duration_s * KWH_PER_J
    return MeasurementSummary(
        baseline_watts=baseline_watts,
        total_watts=total_watts,
        process_watts=process_watts,
        duration_s=duration_s,
        measured_kwh=measured_kwh,
        adjusted_kwh=measured_kwh / config.psu_efficiency,
        psu_efficiency=config.psu_efficiency,
        negative_clamped=raw < 0,
    )
