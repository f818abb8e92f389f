"""Bundled desk-scale grids.

``pseudo_ei``       aggregate single-area stand-in for a large interconnection
                    (1,016 MW trip -> ~59.95 Hz nadir).
``pseudo_ercot``    aggregate small-system stand-in (390 MW trip -> ~59.90 Hz nadir).
``pseudo_ei_3area`` three tied regions with four units each, for spatial checks.
"""

import json
from importlib import resources

from gridfreq.simcore import EventSpec, GridModel

FIXTURES = ("pseudo_ei", "pseudo_ercot", "pseudo_ei_3area")

EVENTS = {
    "pseudo_ei": EventSpec(5.0, 1016.0, "EI"),
    "pseudo_ercot": EventSpec(5.0, 390.0, "ERCOT"),
    "pseudo_ei_3area": EventSpec(5.0, 1016.0, "OH"),
}


def load_grid(name: str) -> GridModel:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    text = resources.files("gridfreq.data").joinpath(f"{name}.json").read_text()
    return GridModel.from_dict(json.loads(text))


def load(name: str) -> tuple[GridModel, EventSpec]:
    return load_grid(name), EVENTS[name]
