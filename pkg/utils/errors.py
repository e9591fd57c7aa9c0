"""Exceptions raised by the simulator.

All of them derive from ValueError so callers that only know about bad
input keep working.
"""


class SimulationError(ValueError):
    """Base class for every error the simulator raises on purpose."""


class ContractViolation(SimulationError):
    """Arguments are individually valid but do not fit together
    (mismatched photon numbers, wrong basis, empty search interval)."""


class PhotonRangeError(SimulationError):
    """A photon number or index lies outside the supported range."""


class UnsupportedInputError(SimulationError):
    """The request is well formed but the method does not cover it."""


class AliasingError(ContractViolation):
    """A phase grid is too coarse for the harmonic being extracted."""
