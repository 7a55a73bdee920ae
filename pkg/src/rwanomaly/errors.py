"""Exceptions and warnings shared across the package."""


class RwanomalyError(Exception):
    """Base class for errors raised by this package."""


class SingularSystemError(RwanomalyError):
    """The linear system of the closed-form stationary solve is singular."""


class DimensionMismatchError(RwanomalyError):
    """Array shapes of related inputs do not agree."""


class BudgetError(RwanomalyError):
    """An attack budget is invalid, e.g. larger than the optimizable support."""


class EmptyGuidanceError(RwanomalyError):
    """A guiding graph attack produced no usable non-target attack nodes."""


class SearchSpaceError(RwanomalyError):
    """The exhaustive search would exceed the enumeration guard."""


class GadgetInstanceError(RwanomalyError):
    """A reduction-gadget instance violates the construction's assumptions."""


class ParseError(RwanomalyError):
    """A data file failed to parse; the message names the offending line."""


class SingleClassError(RwanomalyError):
    """A ranking metric was requested with only one class present."""


class NonConvergenceWarning(UserWarning):
    """The iterative stationary solve hit its iteration cap above tolerance."""


class DegenerateVectorWarning(UserWarning):
    """A similarity was requested on a constant/zero vector; defined as 0."""


class NoProgressWarning(UserWarning):
    """An attack's loss failed to decrease over its final stretch of epochs."""


class ShortfallWarning(UserWarning):
    """Fewer candidates than the budget were available; all were used."""
