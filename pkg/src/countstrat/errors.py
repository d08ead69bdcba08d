"""Exception types shared across the package."""


class StratError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(StratError):
    """Malformed input text (CSV/JSON). Message names the offending line."""


class ValidationError(StratError):
    """Input violates a documented precondition or invariant."""


class RangeError(StratError):
    """Bounds fall outside the histogram's count range."""
