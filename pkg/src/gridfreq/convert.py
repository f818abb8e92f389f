"""Conversion of legacy governor models to the WSIEG1 structure.

TGOV1 and IEEEG1 map onto WSIEG1 in closed form.  GAST and IEESGO have no
closed-form map here; they are fitted numerically by matching step
responses.  Every conversion is checked by simulating source and result
side by side.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from gridfreq.errors import InvalidParameterError, NumericInputError
from gridfreq.govblocks import (
    DeadbandSpec,
    GastParams,
    GovernorModel,
    Ieeeg1Params,
    IeesgoParams,
    Tgov1Params,
    Wsieg1Params,
    governor_response,
)
from gridfreq.optim import nelder_mead

# Rate limits wide enough never to bind in a frequency event.
UNLIMITED_UO = 10.0
UNLIMITED_UC = -10.0


@dataclass(frozen=True)
class FitConfig:
    probes: tuple = (-0.2, -0.05, -0.01)  # speed-deviation steps, Hz
    horizon: float = 60.0
    dt: float = 0.005
    tolerance: float = 1e-3  # pu, applied to the max-abs verification error
    pmech0: float = 0.7
    f0: float = 60.0
    max_iter: int = 600
    restarts: int = 4


@dataclass
class ConversionReport:
    source_kind: str
    method: str  # "Analytic" or "ResponseFit"
    params: Wsieg1Params
    rms: float
    max_abs: float
    verified: bool
    tolerance: float
    damping_migrated: float = 0.0  # turbine damping moved to machine damping, pu on machine base
    iterations: int = 0
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d


def convert_tgov1(p: Tgov1Params, db: DeadbandSpec = DeadbandSpec()) -> Wsieg1Params:
    """Closed-form TGOV1 -> WSIEG1 map.

    The TGOV1 valve lag becomes the servo (T3), the lead-lag splits into a
    direct fraction T2/T3 and a lagged fraction through T5.  ``Dt`` has no
    WSIEG1 counterpart and is dropped here (see :func:`convert`).
    """
    if p.T3 == 0:
        raise InvalidParameterError("TGOV1 T3 must be non-zero for conversion")
    ratio = p.T2 / p.T3
    return Wsieg1Params(
        K=1.0 / p.R, T1=0.0, T2=0.0, T3=p.T1, Uo=UNLIMITED_UO, Uc=UNLIMITED_UC,
        Pmax=p.Vmax, Pmin=p.Vmin, T4=0.0, T5=p.T3, T6=0.0, T7=0.0,
        K1=ratio, K3=1.0 - ratio, K5=0.0, K7=0.0, db=db,
    )


def convert_ieeeg1(p: Ieeeg1Params, db: DeadbandSpec = DeadbandSpec()) -> Wsieg1Params:
    """WSIEG1 is IEEEG1 plus a deadband, so this is a field copy."""
    vals = {f.name: getattr(p, f.name) for f in fields(Ieeeg1Params)}
    return Wsieg1Params(**vals, db=db)


def _strip_damping(source: GovernorModel) -> tuple[GovernorModel, float]:
    if isinstance(source, Tgov1Params):
        return replace(source, Dt=0.0), source.Dt
    if isinstance(source, GastParams):
        return replace(source, Dturb=0.0), source.Dturb
    if isinstance(source, Wsieg1Params):
        return replace(source, db=DeadbandSpec.none(source.db.f0)), 0.0
    return source, 0.0


def _probe_signal(step_hz: float, cfg: FitConfig) -> np.ndarray:
    n = int(round(cfg.horizon / cfg.dt)) + 1
    return np.full(n, step_hz / cfg.f0)


def verify_conversion(source: GovernorModel, converted: GovernorModel, probes=None,
                      cfg: FitConfig = FitConfig()) -> tuple[float, float]:
    """(rms, max_abs) output difference over all probe steps, same pmech0 and dt."""
    probes = cfg.probes if probes is None else probes
    diffs = []
    for step in probes:
        dw = _probe_signal(step, cfg)
        a = governor_response(source, cfg.pmech0, dw, cfg.dt)
        b = governor_response(converted, cfg.pmech0, dw, cfg.dt)
        diffs.append(a - b)
    d = np.concatenate(diffs)
    return float(np.sqrt(np.mean(d * d))), float(np.max(np.abs(d)))


def _limits(p: GovernorModel) -> tuple[float, float]:
    if isinstance(p, (Tgov1Params, GastParams)):
        return p.Vmin, p.Vmax
    return p.Pmin, p.Pmax


def convert_by_fit(source: GovernorModel, db: DeadbandSpec = DeadbandSpec(),
                   cfg: FitConfig = FitConfig()) -> ConversionReport:
    """Fit WSIEG1 gain, servo lag, reheat lag and direct fraction to the source's step responses.

    The deadband is off while fitting and attached to the result afterwards.
    A residual above ``cfg.tolerance`` yields ``verified=False``.
    """
    stripped, migrated = _strip_damping(source)
    targets = [governor_response(stripped, cfg.pmech0, _probe_signal(s, cfg), cfg.dt) for s in cfg.probes]
    if not all(np.all(np.isfinite(t)) for t in targets):
        raise NumericInputError("source response is not finite")
    nodb = DeadbandSpec.none(cfg.f0)
    if isinstance(stripped, Ieeeg1Params):
        base = convert_ieeeg1(stripped, nodb)
    else:
        lo, hi = _limits(stripped)
        small = min(cfg.probes, key=abs)
        gain = abs(targets[cfg.probes.index(small)][-1] - cfg.pmech0) / abs(small / cfg.f0)
        base = Wsieg1Params(K=gain, T1=0.0, T2=0.0, T3=0.5, Uo=UNLIMITED_UO, Uc=UNLIMITED_UC,
                            Pmax=hi, Pmin=lo, T4=0.0, T5=5.0, K1=0.3, K3=0.7, db=nodb)

    def candidate(x):
        return replace(base, K=float(x[0]), T3=float(x[1]), T5=float(x[2]), K1=float(x[3]),
                       K3=float(1.0 - x[3]))

    def objective(x):
        cand = candidate(x)
        err = 0.0
        count = 0
        for step, tgt in zip(cfg.probes, targets):
            r = governor_response(cand, cfg.pmech0, _probe_signal(step, cfg), cfg.dt)
            err += float(np.sum((r - tgt) ** 2))
            count += len(r)
        val = float(np.sqrt(err / count))
        if not np.isfinite(val):
            raise NumericInputError("fit objective is not finite")
        return val

    lower = np.array([0.0, 0.005, 0.0, 0.0])
    upper = np.array([max(100.0, 2.0 * base.K), max(30.0, base.T3), max(60.0, base.T5), 1.0])
    x = np.array([base.K, base.T3, base.T5, base.K1])
    history: list = []
    iterations = 0
    step = 0.15
    for _ in range(cfg.restarts):
        res = nelder_mead(objective, x, lower, upper, step=step, max_iter=cfg.max_iter, ftol=1e-14,
                          stop=lambda _x, f: f <= 1e-12)
        improved = not history or res.fun < history[-1]
        history.extend(h for h in res.history if not history or h <= history[-1])
        iterations += res.iterations
        if improved:
            x = res.x
        if res.fun <= 1e-12:
            break
        step *= 0.3
    fitted = candidate(x)
    rms, max_abs = verify_conversion(stripped, fitted, cfg=cfg)
    return ConversionReport(
        source_kind=source.kind, method="ResponseFit", params=replace(fitted, db=db),
        rms=rms, max_abs=max_abs, verified=bool(max_abs <= cfg.tolerance), tolerance=cfg.tolerance,
        damping_migrated=migrated, iterations=iterations, history=history,
    )


def convert(source: GovernorModel, db: DeadbandSpec = DeadbandSpec(), method: str = "analytic",
            cfg: FitConfig = FitConfig()) -> ConversionReport:
    """Convert with the requested method and verify against the source.

    Turbine damping (TGOV1 ``Dt``, GAST ``Dturb``) is reported in
    ``damping_migrated`` and excluded from verification; callers fold it
    into machine damping (:func:`convert_grid` does this).
    """
    if method == "fit":
        return convert_by_fit(source, db, cfg)
    if method != "analytic":
        raise InvalidParameterError(f"unknown conversion method {method!r}")
    stripped, migrated = _strip_damping(source)
    if isinstance(stripped, Tgov1Params):
        out = convert_tgov1(stripped, db)
    elif isinstance(stripped, Ieeeg1Params):
        out = convert_ieeeg1(stripped, db)
    else:
        raise InvalidParameterError(f"no analytic conversion for {source.kind}; use method='fit'")
    rms, max_abs = verify_conversion(stripped, replace(out, db=DeadbandSpec.none(cfg.f0)), cfg=cfg)
    return ConversionReport(source.kind, "Analytic", out, rms, max_abs, bool(max_abs <= cfg.tolerance),
                            cfg.tolerance, damping_migrated=migrated)


def convert_grid(grid, db: DeadbandSpec = DeadbandSpec(), method: str = "analytic",
                 cfg: FitConfig = FitConfig()):
    """Convert every governor in a grid to WSIEG1.

    Returns the new grid and one report per converted machine.  Migrated
    turbine damping is added to the owning area's load damping on the
    system base.
    """
    from gridfreq.simcore import AreaSpec  # local: simcore imports govblocks only

    reports = {}
    extra = {a.id: 0.0 for a in grid.areas}
    machines = []
    for m in grid.machines:
        if m.governor is None or isinstance(m.governor, Wsieg1Params):
            machines.append(m)
            continue
        kind_method = method if isinstance(m.governor, (Tgov1Params, Ieeeg1Params)) else "fit"
        rep = convert(m.governor, replace(db, f0=grid.f0), kind_method, replace(cfg, pmech0=m.pmech0, f0=grid.f0))
        reports[m.id] = rep
        if m.governor_enabled:
            extra[m.area] += rep.damping_migrated * m.mva / grid.system_base
        machines.append(replace(m, governor=rep.params))
    areas = [AreaSpec(a.id, a.damping + extra[a.id], a.label) for a in grid.areas]
    return replace(grid, machines=tuple(machines), areas=tuple(areas)), reports


__all__ = [
    "ConversionReport", "FitConfig", "convert", "convert_by_fit", "convert_grid", "convert_ieeeg1",
    "convert_tgov1", "verify_conversion", "GastParams", "IeesgoParams",
]
