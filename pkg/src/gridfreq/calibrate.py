"""Coordinated tuning of governor ratio, deadband width and inertia scale.

The search minimises the sum over the four metrics of
``(mismatch / success_threshold)**2`` with a bounded simplex, restarting
from a fixed seed set, and stops as soon as every metric is within its
success threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from gridfreq import metrics as mx
from gridfreq.errors import GridFreqError, InvalidParameterError
from gridfreq.metrics import (
    METRICS,
    MetricsConfig,
    MismatchReport,
    ResponseMetrics,
    SuccessThresholds,
    score,
)
from gridfreq.optim import nelder_mead
from gridfreq.simcore import EventSpec, GridModel, SimConfig, simulate

KNOB_NAMES = ("governor_ratio", "deadband", "inertia_scale")
LOWER = np.array([0.0, 0.0, 0.2])
UPPER = np.array([1.0, 0.1, 5.0])
SEEDS = ((1.0, 0.0, 1.0), (0.5, 0.036, 1.0), (0.8, 0.036, 1.2))


@dataclass(frozen=True)
class KnobVector:
    governor_ratio: float
    deadband: float  # Hz
    inertia_scale: float

    def __post_init__(self):
        for name in KNOB_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))
        x = self.as_array()
        if not np.all(np.isfinite(x)):
            raise InvalidParameterError("knobs must be finite")
        if np.any(x < LOWER) or np.any(x > UPPER):
            raise InvalidParameterError(f"knobs {tuple(x)} outside bounds {tuple(LOWER)}..{tuple(UPPER)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.governor_ratio, self.deadband, self.inertia_scale], dtype=float)

    @classmethod
    def from_array(cls, x) -> "KnobVector":
        x = np.clip(np.asarray(x, dtype=float), LOWER, UPPER)
        return cls(float(x[0]), float(x[1]), float(x[2]))

    def to_dict(self) -> dict:
        return {"governor_ratio": self.governor_ratio, "deadband": self.deadband,
                "inertia_scale": self.inertia_scale}


@dataclass(frozen=True)
class CalibrationConfig:
    max_iters: int = 200
    ftol: float = 1e-6
    penalty: float = 100.0
    step: float = 0.15
    start: Optional[KnobVector] = None
    seeds: tuple = SEEDS
    sim: SimConfig = SimConfig()
    metrics: MetricsConfig = MetricsConfig()
    label: Optional[str] = None


@dataclass
class CalibrationResult:
    knobs: KnobVector
    objective: float
    report: Optional[MismatchReport]
    history: list  # best objective so far, appended on each improvement
    iterations: int
    evaluations: int
    converged: bool
    simulated: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "knobs": self.knobs.to_dict(),
            "objective": self.objective,
            "report": None if self.report is None else self.report.to_dict(),
            "history": self.history,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "simulated": self.simulated,
        }


def with_knobs(grid: GridModel, knobs: KnobVector) -> GridModel:
    return grid.with_knobs(governor_ratio=knobs.governor_ratio, inertia_scale=knobs.inertia_scale,
                           deadband_override=knobs.deadband)


def partial_metrics(grid: GridModel, event: EventSpec, knobs: KnobVector,
                    sim: SimConfig = SimConfig(), mcfg: MetricsConfig = MetricsConfig(),
                    label: Optional[str] = None) -> dict:
    """Metrics of the simulated event; entries that cannot be computed are None."""
    tr = simulate(with_knobs(grid, knobs), event, sim)
    return mx._extract(tr, tr.t_event, mcfg, label)


def metrics_objective(target: ResponseMetrics, simulated: dict, th: SuccessThresholds = SuccessThresholds(),
                      penalty: float = 100.0) -> float:
    total = 0.0
    for name in METRICS:
        v = simulated[name] if isinstance(simulated, dict) else getattr(simulated, name)
        if v is None:
            total += penalty
        else:
            total += ((getattr(target, name) - v) / getattr(th, name)) ** 2
    return total


def objective(knobs: KnobVector, grid: GridModel, event: EventSpec, target: ResponseMetrics,
              th: SuccessThresholds = SuccessThresholds(), cfg: CalibrationConfig = CalibrationConfig()) -> float:
    """Threshold-normalised squared mismatch; an all-pass point scores <= 4."""
    sim = partial_metrics(grid, event, knobs, cfg.sim, cfg.metrics, cfg.label)
    return metrics_objective(target, sim, th, cfg.penalty)


def _report(target: ResponseMetrics, sim: dict, th: SuccessThresholds) -> Optional[MismatchReport]:
    if any(sim[k] is None for k in METRICS):
        return None
    return score(target, ResponseMetrics(**sim), th)


def calibrate(grid: GridModel, event: EventSpec, target: ResponseMetrics,
              th: SuccessThresholds = SuccessThresholds(),
              cfg: CalibrationConfig = CalibrationConfig()) -> CalibrationResult:
    """Search the knob box for a point whose simulated metrics all pass against ``target``.

    The optional start point and the seed set are evaluated first; simplex
    runs then start from them in order of objective until the iteration
    budget is spent, the objective stagnates, or every metric passes.  The
    best point ever evaluated is returned.
    """
    for name in METRICS:
        if not math.isfinite(getattr(target, name)):
            raise InvalidParameterError(f"target metric {name} is not finite")
    cache: dict[tuple, tuple[float, dict]] = {}
    best = {"x": None, "f": math.inf}
    history: list = []

    def evaluate(x) -> float:
        key = tuple(np.clip(np.asarray(x, dtype=float), LOWER, UPPER))
        if key not in cache:
            sim = partial_metrics(grid, event, KnobVector(*key), cfg.sim, cfg.metrics, cfg.label)
            cache[key] = (metrics_objective(target, sim, th, cfg.penalty), sim)
        f = cache[key][0]
        if f < best["f"]:
            best["x"], best["f"] = key, f
            history.append(f)
        return f

    def passes(x, _f=None) -> bool:
        key = tuple(np.clip(np.asarray(x, dtype=float), LOWER, UPPER))
        rep = _report(target, cache[key][1], th)
        return rep is not None and rep.passed

    starts = ([] if cfg.start is None else [tuple(cfg.start.as_array())]) + [tuple(s) for s in cfg.seeds]
    starts = [tuple(KnobVector.from_array(s).as_array()) for s in starts]
    todo = [s for s in dict.fromkeys(starts) if s not in cache]
    with ThreadPoolExecutor(max_workers=min(4, len(todo) or 1)) as pool:
        sims = list(pool.map(lambda s: partial_metrics(grid, event, KnobVector(*s), cfg.sim,
                                                       cfg.metrics, cfg.label), todo))
    for s, sim in zip(todo, sims):
        cache[s] = (metrics_objective(target, sim, th, cfg.penalty), sim)
    for s in starts:
        evaluate(s)

    iterations = 0
    if not any(passes(s) for s in starts):
        order = sorted(dict.fromkeys(starts), key=lambda s: cache[s][0])
        for s in order:
            budget = cfg.max_iters - iterations
            if budget <= 0:
                break
            res = nelder_mead(evaluate, best["x"] if s == order[0] else s, LOWER, UPPER, step=cfg.step,
                              max_iter=budget, ftol=cfg.ftol, stop=passes)
            iterations += res.iterations
            if res.reason == "stop":
                break
    # Prefer the lowest-objective passing point; otherwise the best ever seen.
    passing = [k for k in cache if passes(k)]
    chosen = min(passing, key=lambda k: cache[k][0]) if passing else best["x"]
    sim = cache[chosen][1]
    return CalibrationResult(knobs=KnobVector(*chosen), objective=cache[chosen][0],
                             report=_report(target, sim, th), history=history, iterations=iterations,
                             evaluations=len(cache), converged=bool(passing), simulated=dict(sim))


def sensitivity(grid: GridModel, event: EventSpec, knobs: KnobVector, deltas,
                sim: SimConfig = SimConfig(), mcfg: MetricsConfig = MetricsConfig()) -> dict:
    """Central-difference slope of each metric with respect to each knob.

    ``deltas`` gives one perturbation per knob (ratio, deadband Hz, inertia
    scale).  Returns ``{knob: {metric: slope}}``; a metric that cannot be
    extracted at either side raises.
    """
    base = knobs.as_array()
    deltas = np.asarray(deltas, dtype=float)
    out = {}
    for i, name in enumerate(KNOB_NAMES):
        if deltas[i] <= 0:
            raise InvalidParameterError("sensitivity deltas must be positive")
        up, dn = base.copy(), base.copy()
        up[i] += deltas[i]
        dn[i] -= deltas[i]
        kp, km = KnobVector(*up), KnobVector(*dn)  # raises on bound violation
        mp = partial_metrics(grid, event, kp, sim, mcfg)
        mm = partial_metrics(grid, event, km, sim, mcfg)
        row = {}
        for m in METRICS:
            if mp[m] is None or mm[m] is None:
                raise GridFreqError(f"metric {m} unavailable while perturbing {name}")
            row[m] = (mp[m] - mm[m]) / (2.0 * deltas[i])
        out[name] = row
    return out


def average_knobs(results: list[CalibrationResult]) -> KnobVector:
    """Mean of per-event calibrated knobs (reported, not jointly optimised)."""
    if not results:
        raise InvalidParameterError("no calibration results to average")
    return KnobVector.from_array(np.mean([r.knobs.as_array() for r in results], axis=0))
