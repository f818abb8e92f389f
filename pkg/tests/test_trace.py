import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridfreq.errors import GridFreqError
from gridfreq.trace import FrequencyTrace, resample


def ramp(dt=0.1, n=101):
    t = np.arange(n) * dt
    return FrequencyTrace(dt=dt, t_start=0.0, columns={"hz": 60.0 - 0.01 * t})


def test_validation():
    with pytest.raises(GridFreqError):
        FrequencyTrace(dt=0.1, t_start=0.0, columns={"hz": np.array([60.0])})
    with pytest.raises(GridFreqError):
        FrequencyTrace(dt=0.1, t_start=0.0, columns={"hz": np.array([60.0, np.nan])})
    with pytest.raises(GridFreqError):
        FrequencyTrace(dt=0.1, t_start=0.0, columns={"a": np.ones(3), "b": np.ones(4)})
    with pytest.raises(GridFreqError):
        FrequencyTrace(dt=0.0, t_start=0.0, columns={"hz": np.ones(3)})


def test_same_rate_is_identity():
    tr = ramp()
    out = resample(tr, 10.0)
    assert np.array_equal(out.column(), tr.column())


def test_downsample_keeps_retained_samples():
    tr = FrequencyTrace(0.1, 0.0, {"hz": 60 + np.sin(np.arange(101) * 0.3) * 0.01})
    out = resample(tr, 5.0)
    assert out.n == 51
    assert np.allclose(out.column(), tr.column()[::2], atol=1e-12)


@given(rate=st.floats(0.5, 200.0))
@settings(max_examples=30)
def test_ramp_stays_on_ramp(rate):
    tr = ramp()
    out = resample(tr, rate)
    assert np.allclose(out.column(), 60.0 - 0.01 * out.times, atol=1e-12)
    assert out.times[0] == tr.times[0]
    assert out.column()[0] == tr.column()[0]


def test_endpoints_preserved_when_span_divides():
    tr = ramp()
    out = resample(tr, 4.0)
    assert out.t_end == pytest.approx(tr.t_end, abs=1e-12)
    assert out.column()[-1] == pytest.approx(tr.column()[-1], abs=1e-12)


def test_resample_rejects_bad_rate():
    with pytest.raises(GridFreqError):
        resample(ramp(), 0.0)


def test_csv_round_trip(tmp_path):
    tr = FrequencyTrace(0.1, 0.0, {"ohio": np.linspace(60, 59.9, 11), "kansas": np.linspace(60, 59.95, 11)})
    text = tr.to_csv(tmp_path / "t.csv")
    assert text.splitlines()[0] == "time_s,freq_ohio,freq_kansas"
    back = FrequencyTrace.from_csv(tmp_path / "t.csv")
    assert back.labels == ["ohio", "kansas"]
    assert np.allclose(back.column("kansas"), tr.column("kansas"), atol=5e-7)


def test_single_column_header():
    assert ramp().to_csv().splitlines()[0] == "time_s,freq_hz"


def test_shifted_moves_annotation():
    tr = ramp()
    tr.t_event = 2.0
    out = tr.shifted(3.0)
    assert out.t_start == 3.0 and out.t_event == 5.0
