"""Linearised multi-area swing-equation simulator.

Each area ``i`` obeys::

    2 H_i  d(dw_i)/dt = dPm_i - D_i dw_i - sum_j K_ij (delta_i - delta_j) - dP_event_i
           d(delta_i)/dt = 2 pi f0 dw_i

with inertia, damping, tie coefficients and powers on the system MVA base.
Governor outputs (machine base) are rescaled by ``mva / system_base``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from gridfreq import _kernels as kern
from gridfreq.errors import InvalidParameterError, SimulationError
from gridfreq.govblocks import (
    DeadbandSpec,
    GovernorModel,
    Wsieg1Params,
    governor_from_dict,
    governor_init,
    kind_code,
    n_states,
    scale_gain,
)
from gridfreq.trace import FrequencyTrace, resample


@dataclass(frozen=True)
class MachineSpec:
    id: str
    mva: float
    H: float
    area: str
    governor: Optional[GovernorModel] = None
    governor_enabled: bool = True
    pmech0: float = 0.8

    def __post_init__(self):
        if not self.mva > 0:
            raise InvalidParameterError(f"machine {self.id}: mva must be > 0")
        if not self.H > 0:
            raise InvalidParameterError(f"machine {self.id}: H must be > 0")
        if not 0.0 <= self.pmech0 <= 1.2:
            raise InvalidParameterError(f"machine {self.id}: pmech0 must lie in [0, 1.2]")

    @property
    def governed(self) -> bool:
        return self.governor is not None and self.governor_enabled


@dataclass(frozen=True)
class AreaSpec:
    id: str
    damping: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not self.damping >= 0:
            raise InvalidParameterError(f"area {self.id}: damping must be >= 0")
        if not self.label:
            object.__setattr__(self, "label", self.id)


@dataclass(frozen=True)
class TieSpec:
    area_a: str
    area_b: str
    coefficient: float

    def __post_init__(self):
        if self.area_a == self.area_b:
            raise InvalidParameterError("tie connects an area to itself")
        if not self.coefficient > 0:
            raise InvalidParameterError("tie synchronizing coefficient must be > 0")


@dataclass(frozen=True)
class Knobs:
    governor_ratio: float = 1.0
    inertia_scale: float = 1.0
    deadband_override: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.governor_ratio <= 1.0:
            raise InvalidParameterError("governor_ratio must lie in [0, 1]")
        if not 0.0 < self.inertia_scale <= 10.0:
            raise InvalidParameterError("inertia_scale must lie in (0, 10]")
        if self.deadband_override is not None and not self.deadband_override >= 0:
            raise InvalidParameterError("deadband override must be >= 0")


@dataclass(frozen=True)
class GridModel:
    system_base: float
    machines: tuple
    areas: tuple
    ties: tuple = ()
    f0: float = 60.0
    knobs: Knobs = field(default_factory=Knobs)
    aggregate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        object.__setattr__(self, "areas", tuple(self.areas))
        object.__setattr__(self, "ties", tuple(self.ties))
        if not self.system_base > 0 or not self.f0 > 0:
            raise InvalidParameterError("system base and f0 must be positive")
        ids = [a.id for a in self.areas]
        if not ids or len(set(ids)) != len(ids):
            raise InvalidParameterError("areas must be non-empty with unique ids")
        for m in self.machines:
            if m.area not in ids:
                raise InvalidParameterError(f"machine {m.id} references unknown area {m.area!r}")
        for t in self.ties:
            if t.area_a not in ids or t.area_b not in ids:
                raise InvalidParameterError("tie references unknown area")
        if self.aggregate and (len(self.machines) != 1 or len(self.areas) != 1):
            raise InvalidParameterError("aggregate mode needs exactly one area and one machine")

    def area_index(self, area_id: str) -> int:
        for i, a in enumerate(self.areas):
            if a.id == area_id:
                return i
        raise InvalidParameterError(f"unknown area {area_id!r}")

    def with_knobs(self, **kw) -> "GridModel":
        return replace(self, knobs=replace(self.knobs, **kw))

    def to_dict(self) -> dict:
        return {
            "system_base": self.system_base,
            "f0": self.f0,
            "aggregate": self.aggregate,
            "areas": [{"id": a.id, "damping": a.damping, "label": a.label} for a in self.areas],
            "ties": [{"area_a": t.area_a, "area_b": t.area_b, "coefficient": t.coefficient} for t in self.ties],
            "machines": [{
                "id": m.id, "mva": m.mva, "H": m.H, "area": m.area, "pmech0": m.pmech0,
                "governor_enabled": m.governor_enabled,
                "governor": None if m.governor is None else m.governor.to_dict(),
            } for m in self.machines],
            "knobs": {"governor_ratio": self.knobs.governor_ratio,
                      "inertia_scale": self.knobs.inertia_scale,
                      "deadband_override": self.knobs.deadband_override},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridModel":
        try:
            areas = [AreaSpec(str(a["id"]), float(a.get("damping", 1.0)), str(a.get("label", "")))
                     for a in d["areas"]]
            ties = [TieSpec(str(t["area_a"]), str(t["area_b"]), float(t["coefficient"]))
                    for t in d.get("ties", [])]
            machines = [MachineSpec(
                id=str(m["id"]), mva=float(m["mva"]), H=float(m["H"]), area=str(m["area"]),
                governor=None if m.get("governor") is None else governor_from_dict(m["governor"]),
                governor_enabled=bool(m.get("governor_enabled", True)),
                pmech0=float(m.get("pmech0", 0.8)),
            ) for m in d["machines"]]
            k = d.get("knobs", {})
            knobs = Knobs(float(k.get("governor_ratio", 1.0)), float(k.get("inertia_scale", 1.0)),
                          None if k.get("deadband_override") is None else float(k["deadband_override"]))
            return cls(float(d["system_base"]), machines, areas, ties, float(d.get("f0", 60.0)),
                       knobs, bool(d.get("aggregate", False)))
        except KeyError as exc:
            raise InvalidParameterError(f"grid definition missing field {exc}") from None


@dataclass(frozen=True)
class EventSpec:
    """Generation trip of ``trip_mw`` at ``t_event``; ``area=None`` splits it equally."""

    t_event: float
    trip_mw: float
    area: Optional[str] = None

    def __post_init__(self):
        if not self.trip_mw >= 0:
            raise InvalidParameterError("trip_mw must be >= 0")

    def to_dict(self) -> dict:
        return {"t_event": self.t_event, "trip_mw": self.trip_mw, "area": self.area}

    @classmethod
    def from_dict(cls, d: dict) -> "EventSpec":
        return cls(float(d.get("t_event", 5.0)), float(d["trip_mw"]), d.get("area"))


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.005
    horizon: float = 60.0
    report_rate: float = 10.0

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon > 0 and self.report_rate > 0):
            raise InvalidParameterError("dt, horizon and report_rate must be positive")


def apply_knobs(grid: GridModel) -> GridModel:
    """Fold the grid's knobs into an effective grid whose knobs are neutral."""
    kn = grid.knobs
    machines = list(grid.machines)
    if kn.inertia_scale != 1.0:
        machines = [replace(m, H=m.H * kn.inertia_scale) for m in machines]
    if kn.deadband_override is not None:
        machines = [
            replace(m, governor=replace(m.governor, db=replace(m.governor.db, width=kn.deadband_override)))
            if isinstance(m.governor, Wsieg1Params) else m
            for m in machines
        ]
    rho = kn.governor_ratio
    if grid.aggregate:
        m = machines[0]
        if m.governed:
            machines[0] = replace(m, governor_enabled=False) if rho == 0.0 else (
                m if rho == 1.0 else replace(m, governor=scale_gain(m.governor, rho)))
    elif rho < 1.0:
        # Disable from the end of the id-sorted governed list until the
        # remaining governed capacity fraction drops to rho.
        order = sorted((i for i, m in enumerate(machines) if m.governed), key=lambda i: machines[i].id)
        total = sum(machines[i].mva for i in order)
        kept = total
        for i in reversed(order):
            if kept <= rho * total * (1 + 1e-12):
                break
            kept -= machines[i].mva
            machines[i] = replace(machines[i], governor_enabled=False)
    return replace(grid, machines=tuple(machines), knobs=Knobs())


def _check_connected(grid: GridModel):
    n = len(grid.areas)
    seen = {0}
    stack = [0]
    adj = {i: set() for i in range(n)}
    for t in grid.ties:
        a, b = grid.area_index(t.area_a), grid.area_index(t.area_b)
        adj[a].add(b)
        adj[b].add(a)
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != n:
        raise SimulationError("tie graph is not connected")


@dataclass
class _Assembly:
    na: int
    inv2h: np.ndarray
    damp: np.ndarray
    ties: np.ndarray
    wscale: float
    kinds: np.ndarray
    P: np.ndarray
    offs: np.ndarray
    nst: np.ndarray
    area: np.ndarray
    scale: np.ndarray
    pref: np.ndarray
    pm0: np.ndarray
    y0: np.ndarray


def assemble(grid: GridModel) -> _Assembly:
    """Flatten an effective grid (knobs already applied) into kernel arrays."""
    _check_connected(grid)
    na = len(grid.areas)
    h2 = np.zeros(na)
    for m in grid.machines:
        h2[grid.area_index(m.area)] += 2.0 * m.H * m.mva / grid.system_base
    if np.any(h2 <= 0):
        raise SimulationError("every area needs positive inertia")
    ties = np.zeros((na, na))
    for t in grid.ties:
        a, b = grid.area_index(t.area_a), grid.area_index(t.area_b)
        ties[a, b] += t.coefficient
        ties[b, a] += t.coefficient
    gov = [m for m in grid.machines if m.governed]
    kinds = np.array([kind_code(m.governor) for m in gov], dtype=np.int64)
    nst = np.array([n_states(m.governor) for m in gov], dtype=np.int64)
    offs = 2 * na + np.concatenate([[0], np.cumsum(nst)[:-1]]).astype(np.int64) if gov else np.zeros(0, np.int64)
    P = np.zeros((len(gov), kern.NPARAM))
    pref = np.zeros(len(gov))
    pm0 = np.zeros(len(gov))
    y0 = np.zeros(2 * na + int(nst.sum()))
    for j, m in enumerate(gov):
        g = m.governor
        if isinstance(g, Wsieg1Params) and g.db.f0 != grid.f0:
            g = replace(g, db=replace(g.db, f0=grid.f0))
        P[j] = g.as_row()
        st = governor_init(g, m.pmech0)
        y0[offs[j]:offs[j] + nst[j]] = st.x
        pref[j] = st.pref
        pm0[j] = st.pmech
    return _Assembly(
        na=na, inv2h=1.0 / h2, damp=np.array([a.damping for a in grid.areas]), ties=ties,
        wscale=2.0 * math.pi * grid.f0, kinds=kinds, P=P, offs=offs, nst=nst,
        area=np.array([grid.area_index(m.area) for m in gov], dtype=np.int64),
        scale=np.array([m.mva / grid.system_base for m in gov]), pref=pref, pm0=pm0, y0=y0,
    )


def event_vector(grid: GridModel, event: EventSpec) -> np.ndarray:
    na = len(grid.areas)
    dp = event.trip_mw / grid.system_base
    pev = np.zeros(na)
    if event.area is None:
        pev[:] = dp / na
    else:
        pev[grid.area_index(event.area)] = dp
    return pev


def simulate_raw(grid: GridModel, event: EventSpec, cfg: SimConfig = SimConfig()) -> tuple[np.ndarray, float]:
    """Per-step area speed deviations (pu) at the integration rate, and dt used."""
    if not cfg.horizon > event.t_event >= 0:
        raise InvalidParameterError("event time must lie inside the simulation horizon")
    eff = apply_knobs(grid)
    asm = assemble(eff)
    n_steps = int(round(cfg.horizon / cfg.dt))
    k_event = int(math.ceil(event.t_event / cfg.dt - 1e-9))
    dws, ok = kern.integrate(
        asm.y0, asm.na, asm.inv2h, asm.damp, asm.ties, asm.wscale, event_vector(grid, event),
        k_event, n_steps, cfg.dt, asm.kinds, asm.P, asm.offs, asm.nst, asm.area, asm.scale,
        asm.pref, asm.pm0)
    if not ok:
        raise SimulationError(f"state became non-finite near t = {len(dws) * cfg.dt:.3f} s")
    return dws, cfg.dt


def simulate(grid: GridModel, event: EventSpec, cfg: SimConfig = SimConfig()) -> FrequencyTrace:
    """Frequency at every area's observation point, resampled to the reporting rate."""
    dws, dt = simulate_raw(grid, event, cfg)
    cols = {a.label: grid.f0 * (1.0 + dws[:, i]) for i, a in enumerate(grid.areas)}
    full = FrequencyTrace(dt=dt, t_start=0.0, columns=cols, t_event=event.t_event)
    return resample(full, cfg.report_rate)


def simulate_pair(grid: GridModel, event: EventSpec,
                  cfg: SimConfig = SimConfig()) -> tuple[FrequencyTrace, FrequencyTrace]:
    """(trace with the grid's deadbands, trace with every deadband forced to zero)."""
    with_db = simulate(grid, event, cfg)
    without = simulate(grid.with_knobs(deadband_override=0.0), event, cfg)
    return with_db, without


def without_governors(grid: GridModel) -> GridModel:
    return replace(grid, machines=tuple(replace(m, governor_enabled=False) for m in grid.machines))
