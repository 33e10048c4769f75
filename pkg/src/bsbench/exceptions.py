"""Exception hierarchy shared by every module."""


class BSBenchError(Exception):
    """Base class for all errors raised by bsbench."""


class DimensionError(BSBenchError, ValueError):
    """Matrix has the wrong shape for the requested operation."""


class SizeError(BSBenchError, ValueError):
    """Problem exceeds an enumeration or factorial guard."""


class DomainError(BSBenchError, ValueError):
    """Argument lies outside its mathematical domain."""


class ConfigError(BSBenchError, ValueError):
    """Inconsistent or invalid simulation / run configuration."""


class ParseError(BSBenchError, ValueError):
    """Malformed input file."""


class CollisionError(ParseError):
    """A sample reports the same output mode more than once."""
