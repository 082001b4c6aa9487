"""Exception types shared across the package.

The CLI maps these onto exit codes: input-side problems (bad files, bad
config, malformed formats) exit 1, anything else exits 2.
"""


class ProtosegError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ProtosegError):
    """Operands have incompatible or invalid shapes."""


class FormatError(ProtosegError):
    """A file (tensor file, RLE, dump, gt json) violates its format contract."""


class ConfigError(ProtosegError):
    """A configuration file or value is invalid (unknown key, bad range)."""
