"""Exception types raised across the package."""


class CFRunsError(Exception):
    """Base class for all package errors."""


class RationalTerminated(CFRunsError):
    """The expansion ended because the input is an exact rational.

    ``digits`` holds the partial quotients produced before termination.
    """

    def __init__(self, digits):
        self.digits = tuple(digits)
        super().__init__(
            f"expansion terminated after {len(self.digits)} digit(s): rational input"
        )


class PrecisionExhausted(CFRunsError):
    """Refinement could not certify the requested number of digits."""

    def __init__(self, message, digits=()):
        self.digits = tuple(digits)
        super().__init__(message)


class EmptyWord(CFRunsError, ValueError):
    pass


class InvalidInterval(CFRunsError, ValueError):
    pass


class StreamEnded(CFRunsError):
    pass


class AssumptionUnsatisfiable(CFRunsError):
    pass


class TooLarge(CFRunsError, ValueError):
    pass


class ScheduleTooLarge(CFRunsError):
    pass
