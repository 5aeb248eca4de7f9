"""Exception types shared across the engine.

Every error carries a machine-readable ``code`` (its class name) so the
service layer can map failures onto HTTP responses without string matching.
"""

from __future__ import annotations


class EquicityError(Exception):
    """Base class for all engine errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class ZeroRow(EquicityError):
    """A row that must be normalized sums to zero."""

    def __init__(self, row: int, detail: str = "", colour: int | None = None):
        self.row = row
        self.colour = colour
        msg = f"row {row} sums to zero"
        if colour is not None:
            msg += f" (colour {colour})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NegativeEntry(EquicityError):
    """An input that must be nonnegative contains a negative entry."""


class NonFinite(EquicityError):
    """NaN or Inf where finite numbers are required."""


class ShapeMismatch(EquicityError):
    """Operands do not conform."""


class NoConvergence(EquicityError):
    """The stationary-distribution system is rank-deficient or inconsistent."""

    def __init__(self, detail: str, colour: int | None = None):
        self.colour = colour
        msg = detail if colour is None else f"colour {colour}: {detail}"
        super().__init__(msg)


class InfeasibleSeed(EquicityError):
    """A zero seed row/column faces a positive marginal target."""


class CapacityShortfall(EquicityError):
    """The district cannot hold the programme under the strict policy."""


class InvalidTargets(EquicityError):
    """Marginal targets cannot be made consistent under the chosen policy."""


class CoordOverflow(EquicityError):
    """Grid coordinate outside the 21-bit interleaving range."""


class EmptySite(EquicityError):
    def __init__(self, site: int):
        self.site = site
        super().__init__(f"site {site} received zero buildable voxels")


class SiteOverflow(EquicityError):
    def __init__(self, site: int, requested: int, capacity: int):
        self.site = site
        self.requested = requested
        self.capacity = capacity
        super().__init__(
            f"site {site} needs {requested} voxels but only {capacity} are buildable"
        )


class CountMismatch(EquicityError):
    """Selected voxel counts disagree with the volume matrix."""


class AllZeroWeights(EquicityError):
    """Every submitted criterion weight is zero."""


class DegenerateDistances(EquicityError):
    """All colours are co-located; the relative transport cost is undefined."""


class DegenerateGroups(EquicityError):
    """Within-group deviations are all zero; the variance test is undefined."""


class UnbalancedDesign(EquicityError):
    """Cell counts are unequal; only the balanced decomposition is implemented."""


class ConfigInvalid(EquicityError):
    """Game configuration violates a structural invariant."""


class UnknownActor(EquicityError):
    pass


class WrongPhase(EquicityError):
    def __init__(self, expected: str, actual: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"operation requires phase {expected}, state is {actual}")


class CorruptState(EquicityError):
    """A persisted state file failed the schema or integrity check."""
