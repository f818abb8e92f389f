import numpy as np
import pytest

from gridfreq.calibrate import (
    LOWER,
    UPPER,
    CalibrationConfig,
    KnobVector,
    average_knobs,
    calibrate,
    metrics_objective,
    objective,
    partial_metrics,
    sensitivity,
)
from gridfreq.errors import InvalidParameterError, NumericInputError
from gridfreq.fixtures import FIXTURES, load
from gridfreq.metrics import MetricsConfig, ResponseMetrics
from gridfreq.optim import nelder_mead
from gridfreq.simcore import EventSpec, SimConfig

HIDDEN = KnobVector(0.6, 0.036, 1.0)


@pytest.fixture(scope="module")
def ei():
    grid, event = load("pseudo_ei")
    target = ResponseMetrics(**partial_metrics(grid, event, HIDDEN))
    return grid, event, target


def test_knob_bounds():
    with pytest.raises(InvalidParameterError):
        KnobVector(1.2, 0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        KnobVector(0.5, 0.0, float("nan"))
    assert KnobVector.from_array([2.0, -1.0, 9.0]).as_array() == pytest.approx([1.0, 0.0, 5.0])


def test_table1_objective_arithmetic():
    meas = ResponseMetrics.of(59.959, 4.94, 9.9, 59.962)
    sim = ResponseMetrics.of(59.959, 5.58, 9.2, 59.961)
    expected = (0.64 / 10) ** 2 + (0.7 / 3) ** 2 + (0.001 / 0.01) ** 2
    assert metrics_objective(meas, sim) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.0686, abs=1e-4)


def test_self_match_objective_is_zero(ei):
    grid, event, target = ei
    assert objective(HIDDEN, grid, event, target) <= 1e-6


def test_no_governor_pays_penalty(ei):
    # Damping alone settles only slowly; a 25 s horizon leaves the band unreached.
    grid, event, target = ei
    cfg = CalibrationConfig(sim=SimConfig(horizon=25.0), metrics=MetricsConfig(tail_length=2.0))
    off = KnobVector(0.0, 0.0, 1.0)
    assert partial_metrics(grid, event, off, cfg.sim, cfg.metrics)["settling_time"] is None
    assert objective(off, grid, event, target, cfg=cfg) >= 100.0


def test_round_trip_from_far_start(ei):
    grid, event, target = ei
    res = calibrate(grid, event, target, cfg=CalibrationConfig(start=KnobVector(1.0, 0.0, 1.5)))
    assert res.converged and res.report.passed
    assert res.iterations <= 200
    assert np.all(np.diff(res.history) <= 0)
    assert np.all(res.knobs.as_array() >= LOWER) and np.all(res.knobs.as_array() <= UPPER)


def test_start_at_hidden_needs_no_iterations(ei):
    grid, event, target = ei
    res = calibrate(grid, event, target, cfg=CalibrationConfig(start=HIDDEN))
    assert res.converged and res.iterations <= 1
    assert res.knobs == HIDDEN


def test_best_is_no_worse_than_any_seed(ei):
    grid, event, target = ei
    cfg = CalibrationConfig(start=KnobVector(1.0, 0.0, 3.0))
    res = calibrate(grid, event, target, cfg=cfg)
    for s in cfg.seeds:
        assert res.objective <= objective(KnobVector(*s), grid, event, target) + 1e-12


def test_deterministic(ei):
    grid, event, target = ei
    cfg = CalibrationConfig(start=KnobVector(0.9, 0.01, 2.0))
    a, b = calibrate(grid, event, target, cfg=cfg), calibrate(grid, event, target, cfg=cfg)
    assert a.knobs == b.knobs and a.history == b.history and a.iterations == b.iterations


def test_unreachable_target_not_converged(ei):
    grid, event, target = ei
    bad = ResponseMetrics.of(60.5, target.rocof, target.settling_time, target.settling_frequency)
    res = calibrate(grid, event, bad, cfg=CalibrationConfig(max_iters=15))
    assert not res.converged
    assert res.report is None or not res.report.passed
    assert res.objective == min(res.history)


@pytest.mark.parametrize("name", FIXTURES)
def test_self_target_round_trip_every_fixture(name):
    grid, event = load(name)
    hidden = KnobVector(0.7, 0.02, 1.3)
    target = ResponseMetrics(**partial_metrics(grid, event, hidden))
    res = calibrate(grid, event, target)
    assert res.converged


def test_sensitivity_signs(ei):
    grid, event, _ = ei
    table = sensitivity(grid, event, KnobVector(0.6, 0.02, 1.0), (0.05, 0.005, 0.1))
    assert table["inertia_scale"]["rocof"] < 0
    assert table["governor_ratio"]["settling_frequency"] > 0


def test_saturated_deadband_has_zero_sensitivity(ei):
    # A 300 MW trip swings about 38 mHz, well inside a 60 mHz dead zone.
    grid, _, _ = ei
    table = sensitivity(grid, EventSpec(5.0, 300.0), KnobVector(0.6, 0.06, 1.0), (0.05, 0.005, 0.1))
    assert all(v == 0.0 for v in table["deadband"].values())


def test_average_knobs():
    class R:
        def __init__(self, k):
            self.knobs = k
    avg = average_knobs([R(KnobVector(0.4, 0.02, 1.0)), R(KnobVector(0.6, 0.04, 2.0))])
    assert avg.as_array() == pytest.approx([0.5, 0.03, 1.5])


# optimizer

def test_nelder_mead_finds_interior_minimum():
    res = nelder_mead(lambda x: float(np.sum((x - [0.3, 0.7]) ** 2)), [0.9, 0.1], [0, 0], [1, 1], max_iter=300,
                      ftol=1e-14)
    assert res.x == pytest.approx([0.3, 0.7], abs=1e-4)
    assert np.all(np.diff(res.history) <= 0)


def test_nelder_mead_respects_bounds():
    seen = []

    def f(x):
        seen.append(np.array(x))
        return float(-x[0] - x[1])
    res = nelder_mead(f, [0.5, 0.5], [0, 0], [1, 2], max_iter=200)
    pts = np.array(seen)
    assert np.all(pts >= [0, 0]) and np.all(pts <= [1, 2])
    assert res.x == pytest.approx([1, 2], abs=1e-3)


def test_nelder_mead_stop_callback():
    res = nelder_mead(lambda x: float(x[0] ** 2), [1.0], [-2], [2], stop=lambda x, f: f < 0.5)
    assert res.reason == "stop"


def test_nelder_mead_nan_raises():
    with pytest.raises(NumericInputError):
        nelder_mead(lambda x: float("nan"), [0.5], [0], [1])
