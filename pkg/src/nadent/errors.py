"""Exception types shared across the package."""

from __future__ import annotations


class NadentError(Exception):
    """Base class for all package errors."""


class MetricAxiomViolation(NadentError):
    """A candidate metric fails symmetry, positivity or the triangle inequality.

    Carries the offending pair or triple of point labels so the caller can
    see exactly which axiom broke and where.
    """

    def __init__(self, axiom: str, points: tuple, detail: str = ""):
        self.axiom = axiom
        self.points = points
        msg = f"{axiom} fails at {points}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class LengthMismatch(NadentError):
    """Two words of different lengths were compared."""


class TruncationExceeded(NadentError):
    """A map application needs a depth level beyond the space's level cap."""


class SizeCapExceeded(NadentError):
    """An exact algorithm was asked to run beyond its configured size cap."""


class NotACover(NadentError):
    """The union of the given sets does not equal the whole space."""


class EmptyCell(NadentError):
    """Successive-difference partition produced an empty cell.

    ``index`` is the 1-based position of the subcover element whose cell
    vanished, signalling that the subcover was not minimal.
    """

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"cell {index} is empty; element {index} is redundant")


class DegenerateSpace(NadentError):
    """A space with more than one point has diameter zero."""


class TruncationTooCoarse(NadentError):
    """A truncated weak-star metric cannot certify the required separations."""


class CoverTooCoarse(NadentError):
    """A cover's elements are too large for the requested certificate."""


class PreconditionNotSeparated(NadentError):
    """An input set of measures fails its required separation precondition."""

    def __init__(self, pair: tuple, value, needed):
        self.pair = pair
        self.value = value
        self.needed = needed
        super().__init__(
            f"measures {pair} have certified distance {value}, need > {needed}"
        )


class SeparationFailure(NadentError):
    """A projected pair of measures is closer than the certified threshold."""

    def __init__(self, pair: tuple, margin, threshold):
        self.pair = pair
        self.margin = margin
        self.threshold = threshold
        super().__init__(
            f"projected images of {pair} are {margin} apart, need > {threshold}"
        )
