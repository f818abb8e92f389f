import numpy as np
import pytest

from gridfreq.simcore import AreaSpec, EventSpec, GridModel, MachineSpec, SimConfig, TieSpec
from gridfreq.govblocks import Tgov1Params


def single_area(H=5.0, damping=0.0, governors=(), base=1000.0):
    """One area; ``governors`` is a list of (mva, params) pairs added beside a governor-free inertia unit."""
    machines = [MachineSpec("M0", mva=base, H=H, area="A")]
    for i, (mva, gov) in enumerate(governors):
        machines.append(MachineSpec(f"G{i}", mva=mva, H=1e-6, area="A", governor=gov, pmech0=0.5))
    return GridModel(system_base=base, machines=tuple(machines), areas=(AreaSpec("A", damping=damping),))


def three_area(identical=True):
    areas = tuple(AreaSpec(a, damping=1.0) for a in "XYZ")
    machines = []
    for k, a in enumerate("XYZ"):
        H = 5.0 if identical else 3.0 + 2.0 * k
        R = 0.05 if identical else 0.04 + 0.01 * k
        machines.append(MachineSpec(f"{a}1", mva=1000.0, H=H, area=a, governor=Tgov1Params(R=R), pmech0=0.6))
    ties = (TieSpec("X", "Y", 5.0), TieSpec("Y", "Z", 5.0), TieSpec("X", "Z", 5.0))
    return GridModel(system_base=3000.0, machines=tuple(machines), areas=areas, ties=ties)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def short_cfg():
    return SimConfig(dt=0.005, horizon=30.0, report_rate=10.0)


@pytest.fixture
def trip():
    return EventSpec(t_event=5.0, trip_mw=10.0)
