"""Exception hierarchy.

Two families matter to callers: :class:`DataError` for malformed or
inconsistent input (CLI exit code 3) and :class:`NumericalError` for
estimation problems such as a non-existent MLE or a singular Fisher
information matrix (CLI exit code 4).
"""


class BetaGraphError(Exception):
    """Base class for all package errors."""


class DataError(BetaGraphError, ValueError):
    """Input data violates a container invariant or a file schema."""


class DiagonalNonzero(DataError):
    pass


class CountExceedsTrials(DataError):
    pass


class AsymmetricUndirected(DataError):
    pass


class NegativeCount(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class SelfLoop(DataError):
    pass


class EmptyWhitelist(DataError):
    pass


class NoWindows(DataError):
    pass


class ParseError(DataError):
    """Unparseable file. ``line`` and ``offset`` are 1-based when known."""

    def __init__(self, message, line=None, offset=None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {offset}" if offset is not None else "") + ")"
        super().__init__(message + where)


class SchemaError(DataError):
    pass


class InvalidSpecialCase(DataError):
    pass


class DegenerateInput(DataError):
    pass


class NumericalError(BetaGraphError, ArithmeticError):
    """Estimation or linear-algebra failure."""


class NonexistentMLE(NumericalError):
    """A degree statistic is zero or saturated, so no finite MLE exists."""

    def __init__(self, message, details=None):
        self.details = list(details or [])
        super().__init__(message)


class NotConverged(NumericalError):
    def __init__(self, max_iter, final_step_norm, result=None):
        self.max_iter = max_iter
        self.final_step_norm = final_step_norm
        self.result = result
        super().__init__(
            f"fixed-point iteration did not converge in {max_iter} iterations "
            f"(last step norm {final_step_norm:.3e})"
        )


class BracketFailure(NumericalError):
    def __init__(self, slot):
        self.slot = slot
        super().__init__(f"no sign change found for coefficient slot {slot}; "
                         "the MLE is effectively infinite along this coordinate")


class SingularFim(NumericalError):
    pass


class FitFailed(NumericalError):
    def __init__(self, side, cause):
        self.side = side
        self.cause = cause
        super().__init__(f"{side} fit failed: {cause}")


class TooFewValidSims(NumericalError):
    pass
