"""Interconnection frequency-response toolkit.

Simulate generation-trip events on governor-equipped grids, convert legacy
governor models to WSIEG1, extract nadir / RoCoF / settling metrics and
calibrate governor ratio, deadband and inertia against measurements.
"""

from gridfreq.calibrate import CalibrationConfig, CalibrationResult, KnobVector, calibrate, sensitivity
from gridfreq.convert import ConversionReport, convert, convert_by_fit, convert_ieeeg1, convert_tgov1
from gridfreq.govblocks import (
    DeadbandShape,
    DeadbandSpec,
    GastParams,
    Ieeeg1Params,
    IeesgoParams,
    Tgov1Params,
    Wsieg1Params,
    deadband_apply,
    governor_init,
    governor_step,
)
from gridfreq.metrics import (
    MetricsConfig,
    MismatchReport,
    ResponseMetrics,
    SuccessThresholds,
    detect_event,
    extract_metrics,
    score,
)
from gridfreq.simcore import (
    AreaSpec,
    EventSpec,
    GridModel,
    Knobs,
    MachineSpec,
    SimConfig,
    TieSpec,
    apply_knobs,
    simulate,
    simulate_pair,
)
from gridfreq.trace import FrequencyTrace, resample

__version__ = "0.1.0"
