import pytest

from carbonrun.griddata import DatasetSnapshot

MAX_RANGE_UJ = 262_143_328_850


def constant_trace(watts, duration_s, interval_s=1.0, domains=("pkg-0",), start_uj=0):
    """Trace CSV for a machine drawing `watts` per domain, constantly."""
    segments = [(watts, duration_s)]
    return piecewise_trace(segments, interval_s, domains=domains, start_uj=start_uj)


def piecewise_trace(segments, interval_s=1.0, domains=("pkg-0",), start_uj=0):
    """Trace CSV for piecewise-constant power: [(watts, seconds), ...]."""
    lines = []
    t = 0.0
    energy = {d: float(start_uj) for d in domains}
    for d in domains:
        lines.append(f"{t},{d},{int(energy[d])},{MAX_RANGE_UJ}")
    for watts, seconds in segments:
        steps = int(round(seconds / interval_s))
        for _ in range(steps):
            t += interval_s
            for d in domains:
                energy[d] += watts * 1_000_000 * interval_s
                lines.append(f"{t},{d},{int(energy[d])},{MAX_RANGE_UJ}")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def snapshot():
    return DatasetSnapshot.load()
