"""Acceptance criteria 1-7, one printed verdict line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines appear
inline even when output capture is on.
"""

import time
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest

import test_calibrate
import test_govblocks
import test_metrics
import test_simcore
from conftest import single_area
from gridfreq.calibrate import KnobVector, calibrate, partial_metrics
from gridfreq.convert import convert_tgov1, verify_conversion
from gridfreq.fixtures import load
from gridfreq.govblocks import DeadbandSpec, Tgov1Params
from gridfreq.metrics import METRICS, MetricRow, MismatchReport, ResponseMetrics, SuccessThresholds, extract_metrics, score
from gridfreq.simcore import EventSpec, SimConfig, simulate, simulate_pair, simulate_raw, without_governors
from gridfreq.trace import FrequencyTrace
from gridfreq.validation import CaseResult, summarize, table_round

TH = SuccessThresholds()


def verdict(capsys, number, title, check):
    """Run ``check`` (returns a detail string), print one PASS/FAIL line, re-raise failures."""
    try:
        detail = check()
        ok = True
    except AssertionError as exc:
        detail, ok = str(exc).splitlines()[0] if str(exc) else "assertion failed", False
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {title} | {detail}")
    if not ok:
        pytest.fail(f"criterion {number}: {detail}")


# 1 conversion identity

def test_criterion_1_conversion_identity(capsys):
    def check():
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(100):
            T3 = rng.uniform(0.5, 10.0)
            p = Tgov1Params(R=rng.uniform(0.02, 0.1), T1=rng.uniform(0.05, 1.0), T2=rng.uniform(0, 1) * T3, T3=T3,
                            Dt=0.0, Vmax=5.0, Vmin=-5.0)
            _, max_abs = verify_conversion(p, convert_tgov1(p, DeadbandSpec(0.0)))
            worst = max(worst, max_abs)
        elapsed = time.perf_counter() - start
        assert worst <= 1e-6, f"worst max-abs {worst:.3g} pu"
        assert elapsed < 10.0, f"took {elapsed:.1f} s"
        return f"worst max-abs {worst:.2e} pu over 100 draws in {elapsed:.2f} s"
    verdict(capsys, 1, "analytic TGOV1 conversion", check)


# 2 swing oracle

def test_criterion_2_swing_oracle(capsys):
    def check():
        grid = single_area(H=5.0, damping=0.0)
        dws, dt = simulate_raw(grid, EventSpec(5.0, 10.0), SimConfig(horizon=10.0))
        k = int(round(5.0 / dt))
        slope = (dws[k + 1, 0] - dws[k, 0]) * 60.0 / dt
        oracle = -0.01 * 60.0 / (2 * 5.0)
        assert abs(slope / oracle - 1) <= 0.01, f"slope {slope}"
        govs = [(250.0, Tgov1Params(R=0.05, T1=0.2, T2=1.0, T3=4.0)) for _ in range(4)]
        tr = simulate(single_area(H=5.0, damping=1.0, governors=govs), EventSpec(5.0, 10.0), SimConfig(horizon=120.0))
        fs = extract_metrics(tr).settling_frequency
        droop = 60.0 - 0.01 / (20.0 + 1.0) * 60.0
        assert abs(fs - droop) <= 1e-4, f"settling {fs} vs {droop}"
        return (f"initial slope {slope:.6f} Hz/s vs {oracle:.3f} (rel err {abs(slope / oracle - 1):.1e}); "
                f"settling {fs:.7f} vs {droop:.7f} Hz")
    verdict(capsys, 2, "swing-equation oracle", check)


# 3 metric arithmetic from the tables

PAIRS = {
    "Table 1": ((59.959, 4.94, 9.9, 59.962), (59.959, 5.58, 9.2, 59.961), (0.000, 0.64, 0.7, 0.001)),
    "Table 2": ((59.961, 4.39, 11.5, 59.960), (59.959, 4.83, 12.8, 59.963), (0.002, 0.44, 1.3, 0.003)),
    "Table 5 w/o db": ((59.903, 37.6, 20.4, 59.930), (59.901, 37.7, 22.0, 59.935), (0.002, 0.1, 1.6, 0.005)),
    "Table 5 w/ db": ((59.903, 37.6, 20.4, 59.930), (59.902, 37.7, 20.6, 59.931), (0.001, 0.1, 0.2, 0.001)),
}

# Per-case mismatch rows exactly as printed, kept as strings so their written precision is known.
TABLE4_ROWS = [("0.000", "0.64", "0.7", "0.001"), ("0.002", "0.44", "1.3", "0.003"),
               ("0.006", "0.99", "2.3", "0.009"), ("0.001", "0.64", "1.7", "0.009")]
TABLE4_AVG = ("0.002", "0.67", "1.5", "0.006")
TABLE7_ROWS = [("0.003", "7", "2", "0.003"), ("0.003", "2", "0", "0.004"), ("0.01", "6", "3", "0.006"),
               ("0.001", "0.1", "0.2", "0.001"), ("0", "5", "1", "0.009")]
TABLE7_AVG = ("0.004", "4.0", "1.5", "0.005")


def half_ulp(text):
    return float(Decimal(1).scaleb(Decimal(text).as_tuple().exponent)) / 2


def _report(values):
    return MismatchReport(tuple(MetricRow(m, 0.0, v, v, getattr(TH, m), v <= getattr(TH, m))
                                for m, v in zip(METRICS, values)))


def at_precision_of(value, text):
    """Round half-up to the number of decimals written in ``text``."""
    q = Decimal(1).scaleb(Decimal(text).as_tuple().exponent)
    return Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP)


def _check_average(name, rows, printed):
    """Exact mean, then comparison at the printed cell's precision; returns (cells equal, differing cells)."""
    summary = summarize([CaseResult(f"case{i}", _report([float(x) for x in r])) for i, r in enumerate(rows)], TH)
    differ, equal = [], 0
    for j, m in enumerate(METRICS):
        col = [float(r[j]) for r in rows]
        assert summary.average[m] == pytest.approx(sum(col) / len(col), abs=1e-15)
        shown = at_precision_of(summary.average[m], printed[j])
        if shown == Decimal(printed[j]):
            equal += 1
            continue
        # Printed inputs carry +-half a unit in their last written digit; the true mean can move by the average of those.
        slack = sum(half_ulp(r[j]) for r in rows) / len(rows)
        lo, hi = summary.average[m] - slack, summary.average[m] + slack
        p_lo, p_hi = float(printed[j]) - half_ulp(printed[j]), float(printed[j]) + half_ulp(printed[j])
        assert lo <= p_hi and p_lo <= hi, f"{name} {m}: mean {summary.average[m]} cannot round to {printed[j]}"
        differ.append(f"{name} {m} mean {summary.average[m]:.4g} -> {shown}, printed {printed[j]}")
    assert summary.average_passed
    return equal, differ


def test_criterion_3_table_arithmetic(capsys):
    def check():
        for name, (meas, sim, mis) in PAIRS.items():
            rep = score(ResponseMetrics.of(*meas), ResponseMetrics.of(*sim), TH)
            for m, want in zip(METRICS, mis):
                assert table_round(rep.row(m).mismatch, m) == want, f"{name} {m}"
            assert rep.passed, name
        eq4, d4 = _check_average("Table 4", TABLE4_ROWS, TABLE4_AVG)
        eq7, d7 = _check_average("Table 7", TABLE7_ROWS, TABLE7_AVG)
        note = "; ".join(d4 + d7) if d4 + d7 else "none"
        return (f"{4 * len(PAIRS)} score cells and pass flags exact; averages = exact means, {eq4 + eq7}/8 cells "
                f"equal at table precision; not reproducible from the printed rows (within input rounding only): "
                f"{note}")
    verdict(capsys, 3, "Table 1/2/5 mismatches and Table 4/7 averages", check)


# 4 deadband effect

def test_criterion_4_deadband_effect(capsys):
    def check():
        grid, event = load("pseudo_ei")
        with_db, without = simulate_pair(grid.with_knobs(deadband_override=0.036), event)
        excursion = 60.0 - without.column().min()
        assert excursion < 0.05, f"no-deadband excursion {excursion}"
        lower = extract_metrics(without).settling_frequency - extract_metrics(with_db).settling_frequency
        assert lower > 0, f"settling frequency moved by {lower}"
        bare = simulate(without_governors(grid), event)
        width = 60.0 - bare.column().min()
        dead = simulate(grid.with_knobs(deadband_override=width), event)
        diff = float(np.max(np.abs(dead.column() - bare.column())))
        assert diff <= 1e-9, f"wide-deadband trace differs by {diff}"
        return (f"excursion {excursion * 1e3:.1f} mHz; 36 mHz deadband lowers settling by {lower * 1e3:.2f} mHz; "
                f"width {width * 1e3:.1f} mHz gives max |diff| {diff:.1e} Hz vs no-governor trace")
    verdict(capsys, 4, "deadband effect on pseudo-EI", check)


# 5 calibration round trip

def test_criterion_5_calibration_round_trip(capsys):
    def check():
        grid, event = load("pseudo_ei")
        rng = np.random.default_rng(7)
        start = time.perf_counter()
        iters = []
        for _ in range(10):
            hidden = KnobVector(rng.uniform(0.2, 1.0), rng.uniform(0.0, 0.06), rng.uniform(0.5, 2.0))
            target = ResponseMetrics(**partial_metrics(grid, event, hidden))
            res = calibrate(grid, event, target, TH)
            assert res.converged and res.report.passed, f"hidden {hidden} not recovered"
            assert res.iterations <= 200
            iters.append(res.iterations)
        elapsed = time.perf_counter() - start
        assert elapsed < 300, f"took {elapsed:.0f} s"
        return f"10/10 converged, iterations max {max(iters)} (mean {np.mean(iters):.1f}), {elapsed:.1f} s total"
    verdict(capsys, 5, "calibration round trip", check)


# 6 closed-form metrics

def test_criterion_6_closed_form_trace(capsys):
    def check():
        out = []
        for dt in (0.1, 0.01):
            t = np.arange(int(round(65.0 / dt)) + 1) * dt - 5.0
            f = np.where(t < 0, 60.0, np.where(t <= 10, 60 - 0.005 * t,
                                               np.where(t <= 20, 59.95 + 0.002 * (t - 10), 59.97)))
            m = extract_metrics(FrequencyTrace(dt, -5.0, {"hz": f}), 0.0)
            got = (m.point_a, m.nadir, m.rocof, m.settling_frequency, m.settling_time)
            want = (60.0, 59.95, 5.0, 59.97, 17.5)
            tol = (1e-9, 1e-9, 5.0 * dt / 10.0, 1e-9, dt)
            for g, w, e in zip(got, want, tol):
                assert abs(g - w) <= e, f"dt {dt}: got {got}"
            out.append(f"dt {dt}: ({m.point_a:.3f}, {m.nadir:.3f}, {m.rocof:.3f}, "
                       f"{m.settling_frequency:.3f}, {m.settling_time:.2f})")
        return "; ".join(out)
    verdict(capsys, 6, "metrics on the closed-form trace", check)


# 7 invariant suites

def test_criterion_7_invariants(capsys):
    def check():
        test_govblocks.test_deadband_is_odd()
        test_govblocks.test_continuous_deadband_is_1_lipschitz()
        test_simcore.test_coi_conservation()
        test_simcore.test_dt_halving_moves_nadir_little()
        test_simcore.test_symmetric_areas_stay_identical()
        test_simcore.test_zero_trip_is_exact_equilibrium()
        test_metrics.test_time_shift_invariance()
        test_metrics.test_offset_invariance()
        test_metrics.test_score_symmetry()
        grid, event = load("pseudo_ei")
        target = ResponseMetrics(**partial_metrics(grid, event, test_calibrate.HIDDEN))
        test_calibrate.test_deterministic((grid, event, target))
        return ("deadband odd + 1-Lipschitz, COI conservation, dt halving, symmetric areas, exact equilibrium, "
                "time-shift + offset invariance, score symmetry, calibrate determinism")
    verdict(capsys, 7, "invariant property suites", check)
