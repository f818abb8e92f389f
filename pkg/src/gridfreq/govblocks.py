"""Turbine-governor models and the deadband nonlinearity.

Five governor kinds are supported: TGOV1, GAST, IEESGO, IEEEG1 and WSIEG1.
Parameters are plain dataclasses; dynamics live in :mod:`gridfreq._kernels`
so that the grid simulator and the stand-alone stepping API share one
implementation.  All signals are per-unit on the machine base, and the
speed input is the per-unit speed deviation (positive = overspeed).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import ClassVar, Union

import numpy as np

from gridfreq import _kernels as kern
from gridfreq.errors import (
    InfeasibleInitializationError,
    InvalidParameterError,
    NumericInputError,
)

F0_DEFAULT = 60.0


class DeadbandShape(str, enum.Enum):
    CONTINUOUS_OFFSET = "ContinuousOffset"
    STEP = "Step"


_SHAPE_CODE = {DeadbandShape.CONTINUOUS_OFFSET: kern.DB_CONTINUOUS, DeadbandShape.STEP: kern.DB_STEP}


@dataclass(frozen=True)
class DeadbandSpec:
    """Intentional dead zone on the governor speed input.

    ``width`` is a one-sided threshold in Hz: deviations with
    ``|df| <= width`` produce no response.  ``f0`` converts it to per-unit
    speed.
    """

    width: float = 0.036
    shape: DeadbandShape = DeadbandShape.CONTINUOUS_OFFSET
    f0: float = F0_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "shape", DeadbandShape(self.shape))
        if not (math.isfinite(self.width) and self.width >= 0.0):
            raise InvalidParameterError(f"deadband width must be >= 0, got {self.width}")
        if not self.f0 > 0.0:
            raise InvalidParameterError("nominal frequency must be positive")

    @property
    def width_pu(self) -> float:
        return self.width / self.f0

    @classmethod
    def none(cls, f0: float = F0_DEFAULT) -> "DeadbandSpec":
        return cls(0.0, DeadbandShape.CONTINUOUS_OFFSET, f0)

    def to_dict(self) -> dict:
        return {"width": self.width, "shape": self.shape.value, "f0": self.f0}

    @classmethod
    def from_dict(cls, d: dict) -> "DeadbandSpec":
        return cls(float(d.get("width", 0.036)), DeadbandShape(d.get("shape", "ContinuousOffset")),
                   float(d.get("f0", F0_DEFAULT)))


def deadband_apply(x: float, db: DeadbandSpec) -> float:
    """Pass a per-unit speed deviation through the dead zone."""
    return kern.deadband(float(x), db.width_pu, _SHAPE_CODE[db.shape])


def _check(cond: bool, msg: str):
    if not cond:
        raise InvalidParameterError(msg)


class _Params:
    kind: ClassVar[str]

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.to_dict() if isinstance(v, DeadbandSpec) else v
        return out

    def _finite(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise InvalidParameterError(f"{self.kind}.{f.name} is not finite")


@dataclass(frozen=True)
class Tgov1Params(_Params):
    kind: ClassVar[str] = "TGOV1"
    R: float = 0.05
    T1: float = 0.5
    T2: float = 1.0
    T3: float = 3.0
    Dt: float = 0.0
    Vmax: float = 1.0
    Vmin: float = 0.0

    def __post_init__(self):
        self._finite()
        _check(self.R > 0, "TGOV1 requires R > 0")
        _check(self.T1 > 0, "TGOV1 requires T1 > 0")
        _check(self.T3 > 0, "TGOV1 requires T3 > 0")
        _check(0 <= self.T2 <= self.T3, "TGOV1 requires 0 <= T2 <= T3")
        _check(self.Vmin < self.Vmax, "TGOV1 requires Vmin < Vmax")

    def as_row(self) -> np.ndarray:
        row = np.zeros(kern.NPARAM)
        row[:7] = (self.R, self.T1, self.T2, self.T3, self.Dt, self.Vmax, self.Vmin)
        return row


@dataclass(frozen=True)
class GastParams(_Params):
    kind: ClassVar[str] = "GAST"
    R: float = 0.05
    T1: float = 0.4
    T2: float = 0.1
    T3: float = 3.0
    AT: float = 1.0
    KT: float = 2.0
    Vmax: float = 1.0
    Vmin: float = 0.0
    Dturb: float = 0.0

    def __post_init__(self):
        self._finite()
        _check(self.R > 0, "GAST requires R > 0")
        _check(self.T1 > 0 and self.T2 > 0 and self.T3 > 0, "GAST requires T1, T2, T3 > 0")
        _check(self.Vmin < self.Vmax, "GAST requires Vmin < Vmax")

    def as_row(self) -> np.ndarray:
        row = np.zeros(kern.NPARAM)
        row[:9] = (self.R, self.T1, self.T2, self.T3, self.AT, self.KT, self.Vmax, self.Vmin, self.Dturb)
        return row


@dataclass(frozen=True)
class IeesgoParams(_Params):
    kind: ClassVar[str] = "IEESGO"
    K1: float = 20.0
    K2: float = 0.7
    K3: float = 0.0
    T1: float = 0.2
    T2: float = 0.0
    T3: float = 0.1
    T4: float = 0.3
    T5: float = 7.0
    T6: float = 0.0
    Pmax: float = 1.0
    Pmin: float = 0.0

    def __post_init__(self):
        self._finite()
        _check(self.T1 > 0 and self.T3 > 0 and self.T4 > 0, "IEESGO requires T1, T3, T4 > 0")
        _check(self.T2 >= 0 and self.T5 >= 0 and self.T6 >= 0, "IEESGO time constants must be >= 0")
        _check(self.Pmin < self.Pmax, "IEESGO requires Pmin < Pmax")

    def as_row(self) -> np.ndarray:
        row = np.zeros(kern.NPARAM)
        row[:11] = (self.K1, self.K2, self.K3, self.T1, self.T2, self.T3, self.T4, self.T5, self.T6,
                    self.Pmax, self.Pmin)
        return row


def _check_steam(p, name: str):
    p._finite()
    _check(p.K >= 0, f"{name} requires K >= 0")
    _check(p.T3 > 0, f"{name} requires T3 > 0")
    _check(p.Uo > 0 >= p.Uc, f"{name} requires Uo > 0 >= Uc")
    _check(p.Pmin < p.Pmax, f"{name} requires Pmin < Pmax")
    _check(min(p.T1, p.T2, p.T4, p.T5, p.T6, p.T7) >= 0, f"{name} time constants must be >= 0")
    _check(p.K2 == p.K4 == p.K6 == p.K8 == 0, f"{name}: cross-compound fractions K2/K4/K6/K8 must be 0")
    total = p.K1 + p.K3 + p.K5 + p.K7
    _check(min(p.K1, p.K3, p.K5, p.K7) >= 0 and 0 <= total <= 1 + 1e-9,
           f"{name} requires stage fractions in [0, 1] summing to at most 1")


@dataclass(frozen=True)
class Ieeeg1Params(_Params):
    kind: ClassVar[str] = "IEEEG1"
    K: float = 20.0
    T1: float = 0.0
    T2: float = 0.0
    T3: float = 0.1
    Uo: float = 0.1
    Uc: float = -1.0
    Pmax: float = 1.0
    Pmin: float = 0.0
    T4: float = 0.3
    T5: float = 7.0
    T6: float = 0.0
    T7: float = 0.0
    K1: float = 0.3
    K2: float = 0.0
    K3: float = 0.7
    K4: float = 0.0
    K5: float = 0.0
    K6: float = 0.0
    K7: float = 0.0
    K8: float = 0.0

    def __post_init__(self):
        _check_steam(self, self.kind)

    def as_row(self) -> np.ndarray:
        row = np.zeros(kern.NPARAM)
        row[:16] = (self.K, self.T1, self.T2, self.T3, self.Uo, self.Uc, self.Pmax, self.Pmin,
                    self.T4, self.T5, self.T6, self.T7, self.K1, self.K3, self.K5, self.K7)
        return row


@dataclass(frozen=True)
class Wsieg1Params(Ieeeg1Params):
    """IEEEG1 structure with an intentional deadband on the speed input."""

    kind: ClassVar[str] = "WSIEG1"
    db: DeadbandSpec = field(default_factory=DeadbandSpec)

    def as_row(self) -> np.ndarray:
        row = super().as_row()
        row[16] = self.db.width_pu
        row[17] = _SHAPE_CODE[self.db.shape]
        return row


GovernorModel = Union[Tgov1Params, GastParams, IeesgoParams, Ieeeg1Params, Wsieg1Params]

KINDS: dict[str, type] = {c.kind: c for c in (Tgov1Params, GastParams, IeesgoParams, Ieeeg1Params, Wsieg1Params)}
_KIND_CODE = {"TGOV1": kern.TGOV1, "GAST": kern.GAST, "IEESGO": kern.IEESGO,
              "IEEEG1": kern.IEEEG1, "WSIEG1": kern.WSIEG1}


def kind_code(params: GovernorModel) -> int:
    return _KIND_CODE[params.kind]


def n_states(params: GovernorModel) -> int:
    return int(kern.NSTATES[kind_code(params)])


def governor_from_dict(d: dict) -> GovernorModel:
    d = dict(d)
    try:
        cls = KINDS[d.pop("kind")]
    except KeyError as exc:
        raise InvalidParameterError(f"unknown or missing governor kind: {exc}") from None
    if "db" in d:
        if cls is not Wsieg1Params:
            raise InvalidParameterError(f"{cls.kind} has no deadband")
        d["db"] = DeadbandSpec.from_dict(d["db"])
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise InvalidParameterError(f"unknown {cls.kind} fields: {sorted(unknown)}")
    return cls(**{k: (v if k == "db" else float(v)) for k, v in d.items()})


def scale_gain(params: GovernorModel, factor: float) -> GovernorModel:
    """Multiply the droop gain (1/R, K or K1) by ``factor`` > 0."""
    if isinstance(params, (Tgov1Params, GastParams)):
        return replace(params, R=params.R / factor)
    if isinstance(params, IeesgoParams):
        return replace(params, K1=params.K1 * factor)
    return replace(params, K=params.K * factor)


@dataclass
class GovernorState:
    """Continuous states plus the limiter flags latched by the last step."""

    kind: str
    x: np.ndarray
    pref: float
    pmech: float
    at_upper: bool = False
    at_lower: bool = False
    rate_limited: bool = False


def _limits(params: GovernorModel) -> tuple[float, float]:
    if isinstance(params, (Tgov1Params, GastParams)):
        return params.Vmin, params.Vmax
    return params.Pmin, params.Pmax


def governor_init(params: GovernorModel, pmech0: float) -> GovernorState:
    """Equilibrium state producing ``pmech0`` at zero speed deviation."""
    if not math.isfinite(pmech0):
        raise NumericInputError("pmech0 must be finite")
    lo, hi = _limits(params)
    if isinstance(params, Tgov1Params):
        x = np.array([pmech0, pmech0])
        pref = level = pmech0
    elif isinstance(params, GastParams):
        if pmech0 > params.AT:
            raise InfeasibleInitializationError(
                f"GAST output {pmech0} exceeds ambient temperature limit AT={params.AT}")
        x = np.array([pmech0, pmech0, pmech0])
        pref = level = pmech0
    elif isinstance(params, IeesgoParams):
        y5 = params.K2 * pmech0
        x = np.array([0.0, 0.0, pmech0, y5, params.K3 * y5])
        pref = level = pmech0
    else:
        total = params.K1 + params.K3 + params.K5 + params.K7
        if total <= 0:
            raise InfeasibleInitializationError("stage fractions sum to zero; output cannot be set")
        level = pmech0 / total
        x = np.array([0.0, level, level, level, level, level])
        pref = level
    if not (lo <= level <= hi):
        raise InfeasibleInitializationError(
            f"{params.kind} initial position {level:.6g} outside limits [{lo}, {hi}]")
    pm = kern.gov_deriv(kind_code(params), params.as_row(), x, 0.0, pref, np.empty(len(x)))
    return GovernorState(params.kind, x, pref, float(pm), at_upper=level >= hi, at_lower=level <= lo)


def governor_step(params: GovernorModel, state: GovernorState, dw: float,
                  dt: float) -> tuple[GovernorState, float]:
    """Advance one RK4 step of ``dt`` seconds with speed deviation ``dw`` held constant."""
    if not (math.isfinite(dw) and math.isfinite(dt)):
        raise NumericInputError("speed deviation and dt must be finite")
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    code = kind_code(params)
    row = params.as_row()
    xn, pm = kern.gov_rk4_step(code, row, state.x, float(dw), state.pref, float(dt))
    lo, hi = _limits(params)
    pos = xn[1] if code in (kern.IEEEG1, kern.WSIEG1) else xn[0]
    rate_limited = False
    if code in (kern.IEEEG1, kern.WSIEG1):
        e = -kern.deadband(float(dw), row[16], int(row[17]))
        ll = params.K * e if params.T1 == 0 else params.K * (xn[0] + params.T2 / params.T1 * (e - xn[0]))
        raw = (state.pref + ll - xn[1]) / params.T3
        rate_limited = raw > params.Uo or raw < params.Uc
    at_upper = at_lower = False
    if code != kern.IEESGO:
        at_upper, at_lower = bool(pos >= hi), bool(pos <= lo)
    new = GovernorState(state.kind, xn, state.pref, float(pm), at_upper, at_lower, bool(rate_limited))
    return new, float(pm)


def governor_response(params: GovernorModel, pmech0: float, dw: np.ndarray, dt: float) -> np.ndarray:
    """Output trajectory for a sampled speed-deviation signal, starting from equilibrium."""
    dw = np.ascontiguousarray(dw, dtype=float)
    if not np.all(np.isfinite(dw)):
        raise NumericInputError("speed deviation signal contains non-finite values")
    st = governor_init(params, pmech0)
    return kern.gov_response(kind_code(params), params.as_row(), st.x, st.pref, dw, float(dt))
