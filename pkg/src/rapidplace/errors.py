"""Exception types shared across the toolkit."""

from __future__ import annotations


class RapidPlaceError(Exception):
    """Base class for all toolkit errors."""


class ParseError(RapidPlaceError):
    """A device or design file could not be parsed."""


class ValidationError(RapidPlaceError):
    """A value breaks a structural invariant.

    ``field`` names the offending field or entity so diagnostics can point
    at the exact spot in an input file.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CapacityError(RapidPlaceError):
    """The design does not fit the target region.

    ``deficits`` maps block-type name to the number of missing chain-group
    slots (or sites) per type.
    """

    def __init__(self, deficits: dict[str, int]):
        self.deficits = dict(deficits)
        detail = ", ".join(f"{k}: short by {v}" for k, v in self.deficits.items())
        super().__init__(f"design does not fit region ({detail})")


class FlowError(RapidPlaceError):
    """A flow stage failed; ``step`` tags the stage that raised."""

    def __init__(self, step: str, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"flow step '{step}' failed: {cause}")
