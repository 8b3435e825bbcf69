"""Exception types shared across the toolkit."""


class SubmaxError(Exception):
    """Base class for toolkit errors."""


class InvalidElementError(SubmaxError, ValueError):
    """An element id is outside the ground set."""


class InvalidInputError(SubmaxError, ValueError):
    """Malformed vector, set, or configuration input."""


class PreconditionError(SubmaxError, ValueError):
    """An operation precondition was violated."""


class BackendLimitError(SubmaxError, ValueError):
    """Exact enumeration requested beyond the supported ground-set size."""


class InfeasibleError(SubmaxError, ValueError):
    """No feasible solution exists under the given constraint."""


class UnboundedError(SubmaxError, RuntimeError):
    """The LP is unbounded (indicates a modeling bug: boxes are mandatory)."""


class NumericalFailureError(SubmaxError, RuntimeError):
    """The LP pivot loop failed to converge even with the Bland fallback."""


class SizeLimitError(SubmaxError, ValueError):
    """A brute-force request exceeds the hard enumeration bounds."""
