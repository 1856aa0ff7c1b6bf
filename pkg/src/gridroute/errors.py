"""Exception types shared across the package."""


class GridRouteError(Exception):
    """Base class for all errors raised by gridroute."""


class InvariantViolation(GridRouteError, ValueError):
    """A domain object, document, or argument failed validation.

    The message names the first violated invariant.
    """


class NumericalAbort(GridRouteError, RuntimeError):
    """Training or inference produced non-finite numbers.

    When raised from a training run the exception may carry the last-good
    ``checkpoint`` document and the ``records`` collected so far.
    """

    def __init__(self, message, checkpoint=None, records=None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.records = records
