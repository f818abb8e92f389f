"""Measurement ingestion, batch validation and plot-data emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from gridfreq.errors import AlignmentError, GridFreqError, IngestionError, InvalidParameterError
from gridfreq.metrics import (
    METRICS,
    TABLE_DECIMALS,
    MetricsConfig,
    MismatchReport,
    SuccessThresholds,
    extract_metrics,
    score,
    trace_metrics,
)
from gridfreq.simcore import EventSpec, GridModel, SimConfig, simulate
from gridfreq.trace import FrequencyTrace

log = logging.getLogger(__name__)

FREQ_RANGE = (55.0, 65.0)
MAX_BAD_FRACTION = 0.05
JITTER_TOLERANCE = 0.01


def table_round(value: float, metric: str) -> float:
    """Round half-up to the decimals the published tables use for ``metric``."""
    q = Decimal(1).scaleb(-TABLE_DECIMALS[metric])
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class IngestReport:
    rows: int
    unparseable: int
    outliers: int
    resampled: bool


def _parse_time(col: pd.Series) -> pd.Series:
    num = pd.to_numeric(col, errors="coerce")
    if num.notna().mean() >= 0.5:
        return num
    ts = pd.to_datetime(col, errors="coerce", utc=True, format="mixed")
    first = ts.dropna()
    if first.empty:
        return ts.astype(float)
    return (ts - first.iloc[0]).dt.total_seconds()


def ingest_measurement(path, time_col: str = "time_s", freq_col: str = "freq_hz",
                       rate_hint: Optional[float] = None) -> tuple[FrequencyTrace, IngestReport]:
    """Load a measured frequency CSV into a uniform trace.

    The time column may hold seconds or timestamps.  Rows that do not parse
    are dropped (more than 5% is an error); samples outside 55-65 Hz are
    dropped as gross outliers.  If the spacing then deviates from the
    nominal interval by more than 1%, the samples are linearly resampled
    onto a uniform grid spanning the first to the last retained sample.
    """
    try:
        df = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise IngestionError(f"{path}: empty file") from None
    except OSError as exc:
        raise IngestionError(str(exc)) from exc
    if df.empty:
        raise IngestionError(f"{path}: no data rows")
    for c in (time_col, freq_col):
        if c not in df.columns:
            raise IngestionError(f"{path}: column {c!r} not found (have {list(df.columns)})")
    t = _parse_time(df[time_col])
    f = pd.to_numeric(df[freq_col], errors="coerce")
    bad = t.isna() | f.isna() | ~np.isfinite(f.fillna(0.0))
    n_rows = len(df)
    if bad.sum() > MAX_BAD_FRACTION * n_rows:
        raise IngestionError(f"{path}: {int(bad.sum())} of {n_rows} rows unparseable")
    t, f = t[~bad].to_numpy(float), f[~bad].to_numpy(float)
    keep = (f >= FREQ_RANGE[0]) & (f <= FREQ_RANGE[1])
    outliers = int((~keep).sum())
    if outliers:
        log.info("%s: dropped %d out-of-range samples", path, outliers)
    t, f = t[keep], f[keep]
    order = np.argsort(t, kind="stable")
    t, f = t[order], f[order]
    uniq = np.concatenate([[True], np.diff(t) > 0])
    t, f = t[uniq], f[uniq]
    if len(t) < 2:
        raise IngestionError(f"{path}: fewer than 2 usable samples")
    steps = np.diff(t)
    nominal = 1.0 / rate_hint if rate_hint else float(np.median(steps))
    resampled = bool(np.max(np.abs(steps - nominal)) > JITTER_TOLERANCE * nominal)
    if resampled:
        m = max(1, int(round((t[-1] - t[0]) / nominal)))
        grid = np.linspace(t[0], t[-1], m + 1)
        f = np.interp(grid, t, f)
        dt = (t[-1] - t[0]) / m
    else:
        dt = (t[-1] - t[0]) / (len(t) - 1)
    label = freq_col[5:] if freq_col.startswith("freq_") else freq_col
    trace = FrequencyTrace(dt=dt, t_start=float(t[0]), columns={label: f})
    return trace, IngestReport(n_rows, int(bad.sum()), outliers, resampled)


@dataclass
class CaseSpec:
    name: str
    grid: GridModel
    event: EventSpec
    measured: Path
    time_col: str = "time_s"
    freq_col: str = "freq_hz"
    rate_hint: Optional[float] = None
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    label: Optional[str] = None  # simulated observation column


def load_cases(path) -> list[CaseSpec]:
    """Read a cases file; grid and measurement paths are relative to it.

    A ``grid`` entry of the form ``fixture:<name>`` loads a bundled grid.
    """
    from gridfreq.fixtures import load_grid

    path = Path(path)
    doc = json.loads(path.read_text())
    cases = []
    for c in doc.get("cases", doc if isinstance(doc, list) else []):
        g = c["grid"]
        if g.startswith("fixture:"):
            grid = load_grid(g.split(":", 1)[1])
        else:
            grid = GridModel.from_dict(json.loads((path.parent / g).read_text()))
        cols = c.get("columns", {})
        cases.append(CaseSpec(
            name=c["name"], grid=grid, event=EventSpec.from_dict(c["event"]),
            measured=path.parent / c["measured"], time_col=cols.get("time", "time_s"),
            freq_col=cols.get("freq", "freq_hz"), rate_hint=c.get("rate_hint"),
            metrics=MetricsConfig.from_dict(c.get("metrics", {})),
            sim=SimConfig(**c.get("sim", {})), label=c.get("label"),
        ))
    return cases


@dataclass
class CaseResult:
    name: str
    report: Optional[MismatchReport]
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.report is not None and self.report.passed


@dataclass
class ValidationSummary:
    cases: list[CaseResult]
    average: dict
    thresholds: SuccessThresholds

    @property
    def average_passed(self) -> bool:
        return bool(self.average) and all(
            self.average[m] <= getattr(self.thresholds, m) + 1e-12 for m in METRICS)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases) and self.average_passed

    def rounded_average(self) -> dict:
        return {m: table_round(v, m) for m, v in self.average.items()}

    def to_dict(self) -> dict:
        return {
            "cases": [{"name": c.name, "error": c.error,
                       "report": None if c.report is None else c.report.to_dict()} for c in self.cases],
            "average": self.average,
            "thresholds": {m: getattr(self.thresholds, m) for m in METRICS},
            "passed": self.passed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case", *METRICS, "pass"])
        for c in self.cases:
            if c.report is None:
                w.writerow([c.name, *([""] * len(METRICS)), "error"])
            else:
                mis = c.report.mismatches()
                w.writerow([c.name, *(f"{mis[m]:.{TABLE_DECIMALS[m]}f}" for m in METRICS),
                            "true" if c.passed else "false"])
        if self.average:
            avg = self.rounded_average()
            w.writerow(["average", *(f"{avg[m]:.{TABLE_DECIMALS[m]}f}" for m in METRICS),
                        "true" if self.average_passed else "false"])
        w.writerow(["success_value", *(f"{getattr(self.thresholds, m):g}" for m in METRICS), ""])
        return buf.getvalue()


def summarize(results: list[CaseResult], th: SuccessThresholds = SuccessThresholds()) -> ValidationSummary:
    ok = [r.report for r in results if r.report is not None]
    average = {m: float(np.mean([rep.row(m).mismatch for rep in ok])) for m in METRICS} if ok else {}
    return ValidationSummary(list(results), average, th)


def validate_case(case: CaseSpec, th: SuccessThresholds = SuccessThresholds()) -> CaseResult:
    try:
        measured, _ = ingest_measurement(case.measured, case.time_col, case.freq_col, case.rate_hint)
        m_meas = trace_metrics(measured, case.metrics)
        sim = simulate(case.grid, case.event, case.sim)
        m_sim = extract_metrics(sim, sim.t_event, case.metrics, case.label)
        return CaseResult(case.name, score(m_meas, m_sim, th))
    except (GridFreqError, ValueError, OSError) as exc:
        log.warning("case %s failed: %s", case.name, exc)
        return CaseResult(case.name, None, f"{type(exc).__name__}: {exc}")


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("GRIDFREQ_THREADS", "")))
    except ValueError:
        return min(4, os.cpu_count() or 1)


def run_validate(cases: list[CaseSpec], th: SuccessThresholds = SuccessThresholds(),
                 threads: Optional[int] = None) -> ValidationSummary:
    """Simulate, score and summarise every case; failures are recorded, not raised."""
    if not cases:
        raise InvalidParameterError("nothing to validate: empty case list")
    workers = threads or thread_cap()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda c: validate_case(c, th), cases))
    return summarize(results, th)


def emit_plotdata(measured: Optional[FrequencyTrace], simulated: FrequencyTrace, out=None,
                  measured_label: Optional[str] = None, simulated_label: Optional[str] = None) -> str:
    """Overlay CSV on the coarser of the two sample grids, time zeroed at each trace's event."""
    traces = [("simulated", simulated, simulated_label)]
    if measured is not None:
        traces.insert(0, ("measured", measured, measured_label))
    for name, tr, _ in traces:
        if tr.t_event is None:
            raise AlignmentError(f"{name} trace has no event annotation")
    dt = max(tr.dt for _, tr, _ in traces)
    lo = max(tr.t_start - tr.t_event for _, tr, _ in traces)
    hi = min(tr.t_end - tr.t_event for _, tr, _ in traces)
    k0, k1 = int(np.ceil(lo / dt - 1e-9)), int(np.floor(hi / dt + 1e-9))
    if k1 < k0:
        raise AlignmentError("traces do not overlap after alignment")
    rel = dt * np.arange(k0, k1 + 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", *(f"freq_{name}" for name, _, _ in traces)])
    cols = [np.interp(rel, tr.times - tr.t_event, tr.column(lab)) for _, tr, lab in traces]
    for i, t in enumerate(rel):
        w.writerow([f"{t:.6f}", *(f"{c[i]:.6f}" for c in cols)])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
