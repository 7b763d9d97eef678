"""Exception types shared across the package."""


class NumericBreakdownError(RuntimeError):
    """A solver iterate became NaN or Inf.

    Carries the iteration index at which the breakdown was detected.
    """

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")


class SingularSystemError(RuntimeError):
    """The frequency-domain system has a vanishing denominator or an
    uncertifiable solution."""


class UnsupportedStructureError(ValueError):
    """The coupling operator B is not (plus or minus) the identity and no
    fallback y-solver was supplied."""


class OracleFailureError(RuntimeError):
    """A verification oracle could not certify its result (non-finite
    objective value, or iteration cap reached)."""


class PgmFormatError(ValueError):
    """Malformed PGM input; carries the byte offset of the defect."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")
