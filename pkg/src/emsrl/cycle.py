"""Drive-cycle ingestion: uniform time/speed series driving backward simulation.

A cycle file is CSV with two columns ``time_s,speed`` (header optional,
comma-separated, UTF-8).  Speeds may be given in km/h or m/s; they are
stored in m/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IndexOutOfRange, NegativeSpeed, NonUniformTimestep, ParseError

KPH_TO_MPS = 1.0 / 3.6

SPEED_UNITS = ("mps", "kph")

# Relative slack for comparing successive timesteps at load time.
_DT_RTOL = 1e-9


@dataclass(frozen=True)
class DriveCycle:
    """Uniformly sampled vehicle speed trace.

    Attributes:
        name: label carried through run records and reports.
        dt: sample spacing in seconds (> 0).
        speeds: vehicle speed in m/s, all finite and >= 0, length >= 2.
    """

    name: str
    dt: float
    speeds: np.ndarray = field(repr=False)

    def __post_init__(self):
        speeds = np.asarray(self.speeds, dtype=float)
        if speeds.ndim != 1 or speeds.size < 2:
            raise ParseError(f"cycle {self.name!r}: needs >= 2 speed samples")
        if not np.all(np.isfinite(speeds)):
            raise NegativeSpeed(f"cycle {self.name!r}: non-finite speed sample")
        if np.any(speeds < 0):
            raise NegativeSpeed(f"cycle {self.name!r}: negative speed sample")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParseError(f"cycle {self.name!r}: dt must be positive")
        speeds.setflags(write=False)
        object.__setattr__(self, "speeds", speeds)

    def __len__(self):
        return int(self.speeds.size)

    @property
    def duration(self) -> float:
        """Total simulated time in seconds (one dt per sample)."""
        return len(self) * self.dt

    def accelerations(self) -> np.ndarray:
        """Forward-difference acceleration per step in m/s^2; last step is 0."""
        acc = np.zeros(len(self))
        acc[:-1] = np.diff(self.speeds) / self.dt
        return acc


def accel_at(cycle: DriveCycle, k: int) -> float:
    """Acceleration entering step ``k``: (v[k+1] - v[k]) / dt, 0 at the last step."""
    if not 0 <= k < len(cycle):
        raise IndexOutOfRange(f"step {k} outside [0, {len(cycle)})")
    if k == len(cycle) - 1:
        return 0.0
    return float((cycle.speeds[k + 1] - cycle.speeds[k]) / cycle.dt)


def load_cycle(path, speed_unit: str = "kph") -> DriveCycle:
    """Load a two-column ``time_s,speed`` CSV as a :class:`DriveCycle`.

    Rows must have strictly increasing, uniformly spaced times.  A first row
    that does not parse as numbers is treated as a header and skipped.

    Raises:
        ParseError: malformed row or too few samples.
        NonUniformTimestep: unevenly spaced or non-increasing times.
        NegativeSpeed: any speed < 0 or non-finite.
    """
    if speed_unit not in SPEED_UNITS:
        raise ParseError(f"speed_unit must be one of {SPEED_UNITS}, got {speed_unit!r}")
    path = Path(path)
    times = []
    speeds = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                t, v = float(parts[0]), float(parts[1])
            except ValueError:
                if lineno == 1:  # header row
                    continue
                raise ParseError(f"{path}:{lineno}: could not parse {line!r}") from None
            times.append(t)
            speeds.append(v)
    if len(times) < 2:
        raise ParseError(f"{path}: cycle needs at least 2 rows, got {len(times)}")

    times = np.asarray(times)
    deltas = np.diff(times)
    if np.any(deltas <= 0):
        raise NonUniformTimestep(f"{path}: times must be strictly increasing")
    dt = float(deltas[0])
    if np.any(np.abs(deltas - dt) > _DT_RTOL * max(dt, 1.0)):
        raise NonUniformTimestep(f"{path}: timestep varies (first dt={dt})")

    speeds = np.asarray(speeds, dtype=float)
    if speed_unit == "kph":
        speeds = speeds * KPH_TO_MPS
    return DriveCycle(name=path.stem, dt=dt, speeds=speeds)


def save_cycle(cycle: DriveCycle, path, speed_unit: str = "mps") -> None:
    """Write a cycle back to CSV. With unit ``mps`` the values round-trip exactly."""
    if speed_unit not in SPEED_UNITS:
        raise ParseError(f"speed_unit must be one of {SPEED_UNITS}, got {speed_unit!r}")
    factor = 1.0 if speed_unit == "mps" else 3.6
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time_s,speed\n")
        for k, v in enumerate(cycle.speeds):
            fh.write(f"{repr(k * cycle.dt)},{repr(float(v) * factor)}\n")
