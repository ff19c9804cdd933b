"""Exception hierarchy shared across the package.

Everything raised on purpose derives from VceError so the CLI can map
failures to exit codes without enumerating modules.
"""

from __future__ import annotations


class VceError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(VceError):
    """Structural problem with a model or one of its mechanisms."""


class StateSpaceError(ModelError):
    """Product state space exceeds the configured enumeration limit."""


class BindingError(ModelError):
    """Parameter binding failed (unbound, out of range, or bad rows)."""


class EvalError(VceError):
    """Expression evaluation failed (unknown name, non-boolean operand...)."""


class ParseError(VceError):
    """Model text could not be parsed; carries a source location."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.column}: {self.message}"
        return self.message


class EngineError(VceError):
    """Problem while building or querying a joint distribution."""


class UnboundModelError(EngineError):
    """Operation requires a fully numeric model but parameters remain."""


class ZeroProbabilityError(EngineError):
    """Conditioning on (or abducing from) a zero-probability event."""


class AbsoluteContinuityError(EngineError):
    """KL divergence undefined: Q vanishes where P does not."""


class QueryError(VceError):
    """An effect/baseline query references the model inconsistently."""


class NoiseConversionError(QueryError):
    """A CPT node cannot be rewritten as function-plus-noise."""


class DatasetError(VceError):
    """Malformed observational dataset."""


class UnavailableStratumError(DatasetError):
    """An estimator needs a stratum the data never observed."""


class PositivityError(DatasetError):
    """Estimated propensity is zero on a record the estimator must use."""
