"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""


class TtakitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TtakitError):
    """Invalid configuration: unknown key, bad value, unregistered name."""


class DataError(TtakitError):
    """Malformed or unreadable dataset / checkpoint payloads."""


class NumericError(TtakitError):
    """NaN/Inf encountered where finite values are required."""


class DimensionError(TtakitError):
    """Operand shapes incompatible with the requested operation."""


class DomainError(TtakitError):
    """Input outside an operation's mathematical domain (e.g. log of <= 0)."""


class ContractError(TtakitError):
    """Caller violated an API precondition (non-scalar loss, missing grad key)."""


class DegenerateBatchError(ContractError):
    """Batch too small for batch-statistics normalization (N < 2)."""
