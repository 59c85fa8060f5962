"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
InputError -> 3, NumericsError -> 4.
"""


class MMSenseError(Exception):
    """Base class for all package errors."""


class ConfigError(MMSenseError):
    """Invalid configuration: bad parameter values, malformed config files."""


class InputError(MMSenseError):
    """Invalid runtime input: missing/corrupt files, shape or coverage violations."""


class NumericsError(MMSenseError):
    """Numerical failure: divergence, ill-conditioning, non-finite results."""
