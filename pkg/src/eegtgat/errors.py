"""Exception types shared across the package.

The CLI maps these onto stable exit codes: config/parameter problems -> 2,
I/O -> 3, malformed data -> 4, numerical failure -> 5.
"""


class ShapeError(ValueError):
    """Operand shapes are inconsistent with the operation's contract."""


class ParameterError(ValueError):
    """A hyperparameter or design parameter is outside its valid range."""


class ConfigError(ValueError):
    """A run configuration is malformed or self-inconsistent."""


class DataError(ValueError):
    """An input file or payload fails validation."""


class NumericError(ArithmeticError):
    """A computation produced or received non-finite values."""


class ContractError(ValueError):
    """A call violates an operation's precondition."""


class StatsError(ValueError):
    """Requested statistics are undefined for the given sample."""


class SplitError(ValueError):
    """A cross-validation split cannot be constructed."""


class OptimizerError(ValueError):
    """The optimizer received an invalid gradient."""
