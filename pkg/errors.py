"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations

__all__ = (
    'TDColerError',
    'DimensionError',
    'ContractError',
    'NumericalError',
    'ConfigError',
    'SchemaError',
    'StratificationError',
    'TrainingError',
    'UndefinedRegretError',
    'MissingBaselineError',
)


class TDColerError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(TDColerError, ValueError):
    """Operand shapes are incompatible."""


class ContractError(TDColerError, ValueError):
    """An operation was called with inputs violating its precondition."""


class NumericalError(TDColerError, ArithmeticError):
    """A numerical routine failed.

    Parameters
    ----------
    message: str
        Human readable description.
    pivot: int | None
        For factorizations, the zero-based index of the failing pivot.
    """

    def __init__(self, message: str, *, pivot: int | None = None) -> None:
        super().__init__(message)
        self.pivot: int | None = pivot


class ConfigError(TDColerError, ValueError):
    """A configuration value is invalid."""


class SchemaError(TDColerError, ValueError):
    """A dataset or its schema sidecar is malformed."""


class StratificationError(TDColerError, ValueError):
    """A class is too small to be split."""


class TrainingError(TDColerError, RuntimeError):
    """An optimization loop diverged.

    Exactly one of ``epoch`` or ``step`` is usually set, depending on whether the
    loop counts epochs (autoencoders, GM) or steps (KIP).
    """

    def __init__(self, message: str, *, epoch: int | None = None, step: int | None = None) -> None:
        super().__init__(message)
        self.epoch: int | None = epoch
        self.step: int | None = step


class UndefinedRegretError(TDColerError, ZeroDivisionError):
    """Relative regret is undefined because both baselines coincide."""

    def __init__(self, a_full: float, a_random: float) -> None:
        super().__init__(
            f'relative regret undefined: full-data accuracy {a_full!r} equals '
            f'random@10 accuracy {a_random!r}'
        )
        self.a_full: float = a_full
        self.a_random: float = a_random


class MissingBaselineError(TDColerError, LookupError):
    """The results store lacks the baseline runs needed for a regret context."""

    def __init__(self, message: str, *, missing: tuple[str, ...] = ()) -> None:
        super().__init__(message)
        self.missing: tuple[str, ...] = missing
