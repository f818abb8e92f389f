"""Exception hierarchy shared by every gridfreq module."""


class GridFreqError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(GridFreqError, ValueError):
    """A parameter set violates its declared invariants."""


class InfeasibleInitializationError(GridFreqError):
    """Requested operating point lies outside a model's limits."""


class NumericInputError(GridFreqError, ValueError):
    """Non-finite value fed to a numerical routine."""


class SimulationError(GridFreqError):
    """Integration could not proceed (bad topology, divergence, zero inertia)."""


class NoEventDetectedError(GridFreqError):
    pass


class RocofUndefinedError(GridFreqError):
    pass


class SettlingNotReachedError(GridFreqError):
    pass


class IngestionError(GridFreqError):
    pass


class AlignmentError(GridFreqError):
    pass
