"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures (ill-posed division, non-finite results) with 3.
"""


class FdeconvError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FdeconvError, ValueError):
    """A function argument is outside its documented domain."""


class ConfigError(FdeconvError, ValueError):
    """An experiment configuration file or value cannot be used."""


class DegenerateInputError(ParameterError):
    """Input data is degenerate (e.g. identically zero where a norm is needed)."""


class IllPosedError(FdeconvError, ArithmeticError):
    """The deconvolution is ill-posed on a frequency the estimator needs."""


class NumericalError(FdeconvError, ArithmeticError):
    """A computation produced non-finite or otherwise unusable numbers."""
