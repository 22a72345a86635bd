"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
GuardError -> 3.  Library callers can catch them individually; both
ConfigError and DataError are ValueError subclasses.
"""


class ConfigError(ValueError):
    """Invalid option, specification string, or option combination."""


class DataError(ValueError):
    """Invalid, incomplete, or out-of-domain data."""


class GuardError(RuntimeError):
    """A size or resource guard was exceeded."""
