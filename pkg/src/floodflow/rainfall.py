"""24-hour rainfall scenarios: generation, CSV I/O, cumulative totals.

Scenario CSVs have the header line ``hour,mm`` followed by exactly 24 rows,
one per hour 1..24, with non-negative rainfall in millimeters.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

HOURS = 24
CATEGORIES = ("uniform", "nonuniform", "real")


@dataclass(frozen=True)
class RainfallSeries:
    """Hourly rainfall in mm over a 24-hour window."""

    hourly: np.ndarray
    category: str
    label: str = ""

    def __post_init__(self) -> None:
        hourly = np.asarray(self.hourly, dtype=np.float64)
        if hourly.shape != (HOURS,):
            raise ValueError(f"hourly must have shape ({HOURS},), got {hourly.shape}")
        if not np.isfinite(hourly).all():
            raise ValueError("hourly rainfall contains non-finite values")
        if (hourly < 0).any():
            hour = int(np.argmax(hourly < 0)) + 1
            raise ValueError(f"hour {hour}: negative rainfall {hourly[hour - 1]}")
        if self.category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {self.category!r}")
        hourly = hourly.copy()
        hourly.flags.writeable = False
        object.__setattr__(self, "hourly", hourly)

    @property
    def total(self) -> float:
        """Total rainfall over the window, mm."""
        return float(self.hourly.sum())


def gen_uniform(total_mm: float, label: str = "") -> RainfallSeries:
    """Constant-intensity scenario: total_mm spread evenly over 24 hours."""
    if total_mm < 0:
        raise ValueError(f"total rainfall must be non-negative, got {total_mm}")
    hourly = np.full(HOURS, total_mm / HOURS)
    return RainfallSeries(hourly=hourly, category="uniform", label=label or f"uniform-{total_mm:g}mm")


def hyetograph_shape(total_mm: float, peak_hour_mean: float = 12.0, spread: float = 4.0) -> np.ndarray:
    """Bell-shaped hourly profile over hours 1..24 renormalized to sum to total_mm."""
    if total_mm < 0:
        raise ValueError(f"total rainfall must be non-negative, got {total_mm}")
    if spread <= 0:
        raise ValueError(f"spread must be positive, got {spread}")
    hours = np.arange(1, HOURS + 1, dtype=np.float64)
    weights = np.exp(-0.5 * ((hours - peak_hour_mean) / spread) ** 2)
    return weights * (total_mm / weights.sum())


def gen_nonuniform(total_mm: float, seed: int = 0, peak_hour_mean: float = 12.0,
                   spread: float = 4.0, label: str = "") -> RainfallSeries:
    """Bell-shaped scenario with the hourly values randomly shuffled.

    The shuffle permutes the profile from hyetograph_shape, so the multiset
    of hourly values and the total are preserved exactly.
    """
    hourly = hyetograph_shape(total_mm, peak_hour_mean, spread)
    rng = np.random.default_rng(seed)
    rng.shuffle(hourly)
    return RainfallSeries(hourly=hourly, category="nonuniform", label=label or f"nonuniform-{total_mm:g}mm-s{seed}")


def cumulative(series: RainfallSeries, through_hour: int) -> float:
    """Total rainfall in mm over hours 1..through_hour."""
    if not 1 <= through_hour <= HOURS:
        raise ValueError(f"through_hour must be in 1..{HOURS}, got {through_hour}")
    return float(series.hourly[:through_hour].sum())


def _fmt(value: float) -> str:
    v = float(value)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def save_event_csv(series: RainfallSeries, path: str | os.PathLike) -> None:
    """Write a scenario as a hour,mm CSV with 24 data rows."""
    lines = ["hour,mm"]
    for h in range(HOURS):
        lines.append(f"{h + 1},{_fmt(series.hourly[h])}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_event_csv(path: str | os.PathLike) -> RainfallSeries:
    """Parse a hour,mm CSV; the series is tagged with category 'real'."""
    spath = os.fspath(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0].replace(" ", "") != "hour,mm":
        found = lines[0] if lines else "<empty file>"
        raise ValueError(f"{spath}: line 1: expected header 'hour,mm', got {found!r}")
    data = lines[1:]
    if len(data) != HOURS:
        raise ValueError(f"{spath}: expected {HOURS} data rows, found {len(data)}")
    hourly = np.empty(HOURS, dtype=np.float64)
    for i, row in enumerate(data):
        lineno = i + 2
        parts = row.split(",")
        if len(parts) != 2:
            raise ValueError(f"{spath}: line {lineno}: expected 'hour,mm', got {row!r}")
        try:
            hour = int(parts[0])
            value = float(parts[1])
        except ValueError:
            raise ValueError(f"{spath}: line {lineno}: non-numeric token in {row!r}") from None
        if hour != i + 1:
            raise ValueError(f"{spath}: line {lineno}: expected hour {i + 1}, got {hour}")
        if not np.isfinite(value):
            raise ValueError(f"{spath}: line {lineno}: non-finite rainfall {parts[1]!r}")
        if value < 0:
            raise ValueError(f"{spath}: hour {hour}: negative rainfall {value}")
        hourly[i] = value
    label = os.path.splitext(os.path.basename(spath))[0]
    return RainfallSeries(hourly=hourly, category="real", label=label)
