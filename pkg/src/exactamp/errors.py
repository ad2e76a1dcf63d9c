"""Exception types shared across the package."""


class ExactAmpError(Exception):
    pass


class DimensionError(ExactAmpError, ValueError):
    pass


class QubitBudgetError(ExactAmpError):
    pass


class UnboundSlotError(ExactAmpError, KeyError):
    def __str__(self):
        return f"black-box slot {self.args[0]!r} is not bound"


class NotAProjectorError(ExactAmpError, ValueError):
    pass


class InvalidPromiseError(ExactAmpError, ValueError):
    pass


class PromiseViolation(ExactAmpError):
    """Raised when a system's outcome probability matches neither side of a promise.

    ``offenders`` is a list of ``(key, measured_p)`` pairs; the key is a list
    index or an input label, whatever the caller used to identify systems.
    """

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


class VerificationError(ExactAmpError):
    """Simulated probabilities drifted from the analytic ledger."""


class IndistinguishableError(ExactAmpError):
    pass


class NonOrthonormalError(ExactAmpError, ValueError):
    pass
