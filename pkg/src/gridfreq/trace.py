"""Uniformly sampled frequency traces (simulated or measured)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from gridfreq.errors import GridFreqError, IngestionError, InvalidParameterError


@dataclass
class FrequencyTrace:
    """Frequency samples (Hz) per observation point on a shared uniform grid."""

    dt: float
    t_start: float
    columns: dict[str, np.ndarray]
    t_event: Optional[float] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("sample interval must be positive")
        if not self.columns:
            raise InvalidParameterError("trace has no observation columns")
        lens = set()
        for k, v in self.columns.items():
            v = np.asarray(v, dtype=float)
            self.columns[k] = v
            lens.add(len(v))
            if not np.all(np.isfinite(v)):
                raise InvalidParameterError(f"column {k!r} has non-finite samples")
        if len(lens) != 1:
            raise InvalidParameterError("observation columns differ in length")
        if lens.pop() < 2:
            raise InvalidParameterError("trace needs at least 2 samples")

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * (self.n - 1)

    @property
    def labels(self) -> list[str]:
        return list(self.columns)

    def column(self, label: Optional[str] = None) -> np.ndarray:
        if label is None:
            return next(iter(self.columns.values()))
        return self.columns[label]

    def select(self, label: str) -> "FrequencyTrace":
        return replace(self, columns={label: self.columns[label].copy()})

    def shifted(self, dt_shift: float) -> "FrequencyTrace":
        ev = None if self.t_event is None else self.t_event + dt_shift
        return replace(self, t_start=self.t_start + dt_shift, t_event=ev,
                       columns={k: v.copy() for k, v in self.columns.items()})

    # CSV: header time_s,freq_<label>...; a lone column is written as freq_hz.
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = ["freq_hz"] if len(self.columns) == 1 else [f"freq_{k}" for k in self.columns]
        w.writerow(["time_s", *names])
        data = np.column_stack([self.times, *self.columns.values()])
        for row in data:
            w.writerow([f"{x:.6f}" for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "FrequencyTrace":
        """Read a trace written by :meth:`to_csv` (uniform grid assumed)."""
        try:
            raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            with open(path) as fh:
                header = fh.readline().strip().split(",")
        except (OSError, ValueError) as exc:
            raise IngestionError(f"cannot read trace {path}: {exc}") from exc
        if header[0] != "time_s" or len(header) < 2 or raw.shape[0] < 2:
            raise IngestionError(f"{path}: expected header time_s,freq_... and >= 2 rows")
        t = raw[:, 0]
        dt = float(np.mean(np.diff(t)))
        cols = {}
        for i, name in enumerate(header[1:], start=1):
            cols[name[5:] if name.startswith("freq_") else name] = raw[:, i]
        return cls(dt=dt, t_start=float(t[0]), columns=cols)


def resample(trace: FrequencyTrace, rate: float) -> FrequencyTrace:
    """Linearly interpolate every column onto a uniform grid at ``rate`` samples/s.

    The first sample is kept.  The last one is kept as well whenever the span
    is (within 5% of one interval) a whole number of new intervals; otherwise
    the grid stops at the last whole interval.
    """
    if trace.n == 0:
        raise GridFreqError("empty trace")
    if not rate > 0:
        raise InvalidParameterError("rate must be positive")
    new_dt = 1.0 / rate
    if abs(new_dt - trace.dt) <= 1e-12 * trace.dt:
        return replace(trace, columns={k: v.copy() for k, v in trace.columns.items()})
    span = trace.t_end - trace.t_start
    steps = span / new_dt
    m = int(round(steps))
    if m >= 1 and abs(steps - m) <= 0.05:
        grid = np.linspace(trace.t_start, trace.t_end, m + 1)
        out_dt = span / m
    else:
        m = int(np.floor(steps))
        grid = trace.t_start + new_dt * np.arange(m + 1)
        out_dt = new_dt
    t = trace.times
    cols = {k: np.interp(grid, t, v) for k, v in trace.columns.items()}
    return FrequencyTrace(dt=out_dt, t_start=trace.t_start, columns=cols, t_event=trace.t_event)


def resample_irregular(t: np.ndarray, f: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Map strictly increasing irregular samples onto a uniform grid with step ~``dt``."""
    span = t[-1] - t[0]
    m = max(1, int(round(span / dt)))
    grid = np.linspace(t[0], t[-1], m + 1)
    return grid, np.interp(grid, t, f)
