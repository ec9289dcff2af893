"""Exception hierarchy shared by every module."""

from __future__ import annotations


class PentaError(Exception):
    """Base class for all pentakit errors."""


class InvalidLabelError(PentaError):
    """A label index is outside the colour set."""


class EmptyModuleError(PentaError):
    """An operation needs a nonzero-dimensional module."""


class ShapeError(PentaError):
    """Array or direct-sum layout does not match the fusion dimensions."""


class ContractionPairError(PentaError):
    """Two tensor slots cannot be contracted against each other."""


class WeightError(PentaError):
    """A weight system is incomplete or has a vanishing weight."""


class InvalidGroupError(PentaError):
    """A multiplication table does not define a group."""


class InvalidCocycleError(PentaError):
    """Values fail the multiplicative 3-cocycle identity."""


class SingularAssociatorError(PentaError):
    """An associator block map is not invertible."""


class UnsupportedRulesError(PentaError):
    """The solver cannot handle these fusion rules."""


class RangeError(PentaError):
    """A numeric argument is outside the supported range."""


class ConstructionError(PentaError):
    """A builder could not produce a valid solution."""


class DocumentError(PentaError):
    """A solution, rules or weights file failed to parse or validate."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        labels: tuple[str, ...] | None = None,
    ) -> None:
        self.line = line
        self.labels = labels
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
