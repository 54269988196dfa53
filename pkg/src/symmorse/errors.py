"""Exception types shared across the solver."""


class SymMorseError(Exception):
    """Base class for all solver errors."""


class DomainError(SymMorseError, ValueError):
    """Special-function parameters outside the supported domain."""


class ConvergenceError(SymMorseError, ArithmeticError):
    """A series did not reach the requested tolerance within its term cap."""


class NotImplementedFallback(SymMorseError, NotImplementedError):
    """The degenerate-index fallback was requested outside its validated range."""


class GuardError(SymMorseError, ValueError):
    """Series argument at the origin exceeds the configured safety bound."""


class SingularSystem(SymMorseError, ArithmeticError):
    """Origin-matching system is numerically singular (precision exhausted)."""


class PreconditionError(SymMorseError, ValueError):
    """Trial energy or configuration violates an operation's precondition."""


class GridTooCoarse(SymMorseError, ValueError):
    """Node-count grid cannot separate neighbouring zeros."""


class NoSuchLevel(SymMorseError, LookupError):
    """The requested level does not exist in the sector."""

    def __init__(self, message, found=None):
        super().__init__(message)
        self.found = found


class PrecisionFloor(SymMorseError, ValueError):
    """Requested bracket width is below what double precision can certify."""


class SingularTransfer(SymMorseError, ArithmeticError):
    """Right-hand basis is degenerate at a matching point."""


class ChainError(SymMorseError, ValueError):
    """A segment chain is malformed or cannot host a bound state at this energy."""
