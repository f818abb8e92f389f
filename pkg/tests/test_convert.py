from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridfreq.convert import (
    UNLIMITED_UC,
    UNLIMITED_UO,
    FitConfig,
    convert,
    convert_by_fit,
    convert_grid,
    convert_ieeeg1,
    convert_tgov1,
    verify_conversion,
)
from gridfreq.errors import InvalidParameterError
from gridfreq.govblocks import DeadbandSpec, GastParams, Ieeeg1Params, IeesgoParams, Tgov1Params, Wsieg1Params
from gridfreq.simcore import AreaSpec, GridModel, MachineSpec

NODB = DeadbandSpec(0.0)


def test_tgov1_analytic_example():
    w = convert_tgov1(Tgov1Params(R=0.05, T1=0.5, T2=1.0, T3=3.0), NODB)
    assert (w.K, w.T3, w.T5) == pytest.approx((20.0, 0.5, 3.0))
    assert w.K1 == pytest.approx(1 / 3) and w.K3 == pytest.approx(2 / 3)
    assert (w.T1, w.T2, w.T4, w.T6, w.T7, w.K5, w.K7) == (0, 0, 0, 0, 0, 0, 0)
    assert (w.Uo, w.Uc) == (UNLIMITED_UO, UNLIMITED_UC)


@pytest.mark.parametrize("T2, K1, K3", [(0.0, 0.0, 1.0), (3.0, 1.0, 0.0)])
def test_tgov1_degenerate_lead_lag(T2, K1, K3):
    w = convert_tgov1(Tgov1Params(T2=T2, T3=3.0), NODB)
    assert (w.K1, w.K3) == (K1, K3)


def test_tgov1_limits_carried_over():
    w = convert_tgov1(Tgov1Params(Vmax=0.95, Vmin=0.1))
    assert (w.Pmax, w.Pmin) == (0.95, 0.1)
    assert w.db == DeadbandSpec()


@st.composite
def tgov1s(draw):
    T3 = draw(st.floats(0.5, 10.0))
    return Tgov1Params(R=draw(st.floats(0.02, 0.1)), T1=draw(st.floats(0.05, 1.0)), T3=T3,
                       T2=draw(st.floats(0.0, 1.0)) * T3, Vmax=5.0, Vmin=-5.0)


@given(tgov1s())
@settings(max_examples=20, deadline=None)
def test_tgov1_conversion_identity(p):
    w = convert_tgov1(p, NODB)
    assert w.K1 + w.K3 == pytest.approx(1.0, abs=1e-15)
    _, max_abs = verify_conversion(p, w)
    assert max_abs <= 1e-6


def test_ieeeg1_copy_is_exact():
    p = Ieeeg1Params(K=15, T1=0.3, T2=0.1, T3=0.2, T4=0.3, T5=5.0, T6=0.5, K1=0.2, K3=0.3, K5=0.4, K7=0.1)
    w = convert_ieeeg1(p, NODB)
    assert w.K1 + w.K3 + w.K5 + w.K7 == pytest.approx(1.0)
    assert verify_conversion(p, w) == (0.0, 0.0)


def test_ieeeg1_with_deadband_ignores_small_input():
    # Converted side is dead for a 20 mHz probe, so the error equals the source's full droop response.
    w = convert_ieeeg1(Ieeeg1Params(K=20), DeadbandSpec(0.036))
    _, max_abs = verify_conversion(Wsieg1Params(K=20, db=DeadbandSpec(0.0)), w, probes=(-0.02,))
    assert max_abs == pytest.approx(20 * 0.02 / 60, abs=1e-6)


def test_model_against_itself():
    assert verify_conversion(Tgov1Params(), Tgov1Params()) == (0.0, 0.0)


def test_analytic_not_available_for_gas_turbine():
    with pytest.raises(InvalidParameterError):
        convert(GastParams(), method="analytic")
    with pytest.raises(InvalidParameterError):
        convert(Tgov1Params(), method="magic")


def test_convert_reports_migrated_damping():
    rep = convert(Tgov1Params(Dt=0.4))
    assert rep.method == "Analytic" and rep.verified
    assert rep.damping_migrated == 0.4
    assert rep.max_abs <= 1e-6


@pytest.mark.slow
def test_fit_recovers_tgov1_analytic_response():
    src = Tgov1Params(R=0.05, T1=0.5, T2=1.0, T3=3.0)
    rep = convert_by_fit(src, NODB)
    analytic = convert_tgov1(src, NODB)
    rms, _ = verify_conversion(analytic, rep.params)
    assert rms <= 1e-4 and rep.verified
    assert np.all(np.diff(rep.history) <= 0)


def test_fit_of_wsieg1_is_identity():
    src = Wsieg1Params(db=DeadbandSpec(0.036))
    rep = convert_by_fit(src, NODB)
    assert rep.rms <= 1e-9
    assert rep.params.db == NODB


def test_fit_of_plain_gas_turbine_verifies():
    rep = convert_by_fit(GastParams(), NODB)
    assert rep.method == "ResponseFit" and rep.verified
    assert rep.verified == (rep.max_abs <= rep.tolerance)


def test_fit_flags_temperature_limit_kink():
    # AT barely above the operating point: large probes hit the limiter.
    rep = convert_by_fit(GastParams(AT=0.71), NODB, FitConfig(restarts=1, max_iter=150))
    assert not rep.verified
    assert rep.max_abs > rep.tolerance


def test_fit_history_non_increasing_for_ieesgo():
    rep = convert_by_fit(IeesgoParams(), NODB, FitConfig(restarts=1, max_iter=100))
    assert len(rep.history) > 1
    assert np.all(np.diff(rep.history) <= 0)


def test_convert_then_fit_is_idempotent():
    w = convert_tgov1(Tgov1Params(), NODB)
    rep = convert_by_fit(w, NODB)
    assert rep.rms <= 1e-6


def test_convert_grid_moves_damping_to_area():
    grid = GridModel(
        system_base=1000.0,
        machines=(MachineSpec("a", 500.0, 4.0, "A", Tgov1Params(Dt=0.5), pmech0=0.6),
                  MachineSpec("b", 500.0, 4.0, "A", Ieeeg1Params(), pmech0=0.6)),
        areas=(AreaSpec("A", damping=1.0),),
    )
    new, reports = convert_grid(grid, DeadbandSpec(0.036))
    assert set(reports) == {"a", "b"}
    assert all(isinstance(m.governor, Wsieg1Params) for m in new.machines)
    assert new.areas[0].damping == pytest.approx(1.0 + 0.5 * 0.5)
