"""Exception hierarchy shared by all ksqueue modules."""


class KSQueueError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(KSQueueError, ValueError):
    """Inadmissible model or numerical parameters."""


class PrecisionLoss(KSQueueError, ArithmeticError):
    """The series would need more working precision than the configured ceiling.

    ``x_max`` is the largest argument that fits under the ceiling.
    """

    def __init__(self, message, x=None, x_max=None, digits=None):
        super().__init__(message)
        self.x = x
        self.x_max = x_max
        self.digits = digits


class StabilityError(KSQueueError):
    """A stationary quantity was requested for a queue with rho >= 1."""


class PoleError(KSQueueError, ZeroDivisionError):
    pass


class BranchError(KSQueueError):
    """Square-root branch is ambiguous (both roots have equal modulus)."""


class NumericError(KSQueueError, RuntimeError):
    """An eigensolver or linear solve failed to converge."""


class SamplerGateError(KSQueueError):
    """A time-change sampler failed its moment validation.

    ``diagnostics`` is a list of dicts with keys ``k``, ``empirical``,
    ``target``, ``rel_error`` and ``tolerance``.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
