"""Frequency-response metrics: nadir, RoCoF, settling time, settling frequency.

Windows are converted to sample counts relative to the event index, so the
extraction is exactly invariant to shifting a trace in time.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from gridfreq.errors import (
    InvalidParameterError,
    NoEventDetectedError,
    RocofUndefinedError,
    SettlingNotReachedError,
)
from gridfreq.trace import FrequencyTrace, resample  # noqa: F401  (re-exported)

METRICS = ("nadir", "rocof", "settling_time", "settling_frequency")
METRIC_TITLES = {
    "nadir": "Frequency Nadir (Hz)",
    "rocof": "Rate of Change of Frequency (mHz/s)",
    "settling_time": "Frequency Settling Time (s)",
    "settling_frequency": "Settling Frequency (Hz)",
}
# Decimal places used by the published tables.
TABLE_DECIMALS = {"nadir": 3, "rocof": 2, "settling_time": 1, "settling_frequency": 3}

_BAND_SLACK = 1e-9


@dataclass(frozen=True)
class MetricsConfig:
    pre_window: float = 2.0
    nadir_window: float = 20.0
    settle_band: float = 0.005
    settle_hold: float = 5.0
    tail_window: Optional[tuple[float, float]] = None  # seconds after t0; None = last tail_length s
    tail_length: float = 10.0
    event_threshold: float = 2.0  # mHz/s
    event_smoothing: float = 0.5

    def __post_init__(self):
        if min(self.pre_window, self.nadir_window, self.settle_band, self.settle_hold,
               self.tail_length, self.event_threshold, self.event_smoothing) <= 0:
            raise InvalidParameterError("metric windows, band and threshold must be positive")
        if self.tail_window is not None:
            a, b = self.tail_window
            if not 0 <= a < b:
                raise InvalidParameterError("tail window must satisfy 0 <= start < end")
            object.__setattr__(self, "tail_window", (float(a), float(b)))

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsConfig":
        d = dict(d)
        if d.get("tail_window") is not None:
            d["tail_window"] = tuple(d["tail_window"])
        return cls(**d)


@dataclass(frozen=True)
class ResponseMetrics:
    nadir: float
    rocof: float
    settling_time: float
    settling_frequency: float
    point_a: float
    t_nadir: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ResponseMetrics":
        return cls(**{k: float(d[k]) for k in ("nadir", "rocof", "settling_time", "settling_frequency")},
                   point_a=float(d.get("point_a", float("nan"))), t_nadir=float(d.get("t_nadir", float("nan"))))

    @classmethod
    def of(cls, nadir, rocof, settling_time, settling_frequency) -> "ResponseMetrics":
        """Build from the four table values alone (Point A and t_nadir unknown)."""
        return cls(nadir, rocof, settling_time, settling_frequency, float("nan"), float("nan"))


@dataclass(frozen=True)
class SuccessThresholds:
    nadir: float = 0.010
    rocof: float = 10.0
    settling_time: float = 3.0
    settling_frequency: float = 0.010

    def __post_init__(self):
        if min(self.nadir, self.rocof, self.settling_time, self.settling_frequency) <= 0:
            raise InvalidParameterError("success thresholds must be positive")


@dataclass(frozen=True)
class MetricRow:
    metric: str
    measured: float
    simulated: float
    mismatch: float
    success_value: float
    passed: bool


@dataclass(frozen=True)
class MismatchReport:
    rows: tuple[MetricRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def row(self, metric: str) -> MetricRow:
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)

    def mismatches(self) -> dict[str, float]:
        return {r.metric: r.mismatch for r in self.rows}

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "measured", "simulated", "mismatch", "success_value", "pass"])
        for r in self.rows:
            d = TABLE_DECIMALS[r.metric]
            w.writerow([r.metric, f"{r.measured:.{d}f}", f"{r.simulated:.{d}f}", f"{r.mismatch:.{d}f}",
                        f"{r.success_value:g}", "true" if r.passed else "false"])
        return buf.getvalue()


def detect_event(trace: FrequencyTrace, cfg: MetricsConfig = MetricsConfig(),
                 label: Optional[str] = None) -> float:
    """Earliest sample whose smoothed slope magnitude reaches the threshold.

    The slope at sample ``i`` is the backward difference over the smoothing
    window.  The detected time is stored on ``trace.t_event`` and returned.
    """
    f = trace.column(label)
    k = max(1, int(round(cfg.event_smoothing / trace.dt)))
    if len(f) <= k:
        raise NoEventDetectedError("trace shorter than the smoothing window")
    slope = np.abs(f[k:] - f[:-k]) / (k * trace.dt) * 1e3
    hits = np.flatnonzero(slope >= cfg.event_threshold * (1 - 1e-9))
    if hits.size == 0:
        raise NoEventDetectedError("no sample exceeds the RoCoF detection threshold")
    t0 = trace.t_start + (hits[0] + k) * trace.dt
    trace.t_event = t0
    return t0


def _extract(trace: FrequencyTrace, t0: float, cfg: MetricsConfig, label: Optional[str]):
    """Metrics with ``settling_time`` None when the band is never held."""
    f = trace.column(label)
    n, dt = len(f), trace.dt
    i0 = int(round((t0 - trace.t_start) / dt))
    npre = int(round(cfg.pre_window / dt))
    if i0 - npre < 0 or i0 >= n:
        raise InvalidParameterError("pre-event window not available before t0")
    point_a = float(np.mean(f[i0 - npre:i0]))
    i_end = min(n - 1, i0 + int(round(cfg.nadir_window / dt)))
    seg = f[i0:i_end + 1]
    j = int(np.argmin(seg))
    nadir = float(seg[j])
    if cfg.tail_window is None:
        lo, hi = n - int(round(cfg.tail_length / dt)), n - 1
    else:
        lo = i0 + int(round(cfg.tail_window[0] / dt))
        hi = min(n - 1, i0 + int(round(cfg.tail_window[1] / dt)))
    lo = max(lo, 0)
    if hi < lo:
        raise SettlingNotReachedError("settling tail window is empty")
    fs = float(np.mean(f[lo:hi + 1]))
    inband = np.abs(f - fs) <= cfg.settle_band + _BAND_SLACK
    need = int(round(cfg.settle_hold / dt)) + 1
    run = np.zeros(n + 1, dtype=np.int64)
    for i in range(n - 1, i0 - 1, -1):
        run[i] = run[i + 1] + 1 if inband[i] else 0
    ok = np.flatnonzero(run[i0:n] >= need)
    settling_time = None if ok.size == 0 else float(ok[0] * dt)
    rocof = None if j == 0 else abs(point_a - nadir) / (j * dt) * 1e3
    return dict(nadir=nadir, rocof=rocof, settling_time=settling_time, settling_frequency=fs,
                point_a=point_a, t_nadir=trace.t_start + (i0 + j) * dt)


def extract_metrics(trace: FrequencyTrace, t0: Optional[float] = None,
                    cfg: MetricsConfig = MetricsConfig(), label: Optional[str] = None) -> ResponseMetrics:
    """The four response metrics of one observation column.

    ``t0`` defaults to the trace's event annotation.  Raises
    RocofUndefinedError when the nadir sits at t0 and
    SettlingNotReachedError when the settling band is never held.
    """
    if t0 is None:
        if trace.t_event is None:
            raise InvalidParameterError("trace has no event annotation; pass t0 or run detect_event")
        t0 = trace.t_event
    m = _extract(trace, t0, cfg, label)
    if m["rocof"] is None:
        raise RocofUndefinedError("nadir coincides with the event onset")
    if m["settling_time"] is None:
        raise SettlingNotReachedError("frequency never stays inside the settling band")
    return ResponseMetrics(**m)


def trace_metrics(trace: FrequencyTrace, cfg: MetricsConfig = MetricsConfig(),
                  label: Optional[str] = None) -> ResponseMetrics:
    """Metrics using the event annotation when present, onset detection otherwise."""
    t0 = trace.t_event if trace.t_event is not None else detect_event(trace, cfg, label)
    return extract_metrics(trace, t0, cfg, label)


def score(measured: ResponseMetrics, simulated: ResponseMetrics,
          th: SuccessThresholds = SuccessThresholds()) -> MismatchReport:
    rows = []
    for name in METRICS:
        a, b = getattr(measured, name), getattr(simulated, name)
        mis = abs(a - b)
        limit = getattr(th, name)
        rows.append(MetricRow(name, a, b, mis, limit, bool(mis <= limit + 1e-12)))
    return MismatchReport(tuple(rows))
