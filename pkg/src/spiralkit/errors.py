"""Exception hierarchy shared by all spiralkit modules."""


class SpiralkitError(Exception):
    """Base class for every error raised by spiralkit."""


class ValidationError(SpiralkitError, ValueError):
    """Input violates a documented precondition."""


class InfeasibleDuration(SpiralkitError):
    """Requested readout is shorter than the hardware-limited minimum."""

    def __init__(self, requested_s, minimum_s):
        self.requested_s = float(requested_s)
        self.minimum_s = float(minimum_s)
        super().__init__(
            f"requested readout duration {self.requested_s:.6g} s is shorter "
            f"than the minimum achievable {self.minimum_s:.6g} s"
        )


class CoordOutOfRange(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NonPositiveWeight(ValidationError):
    pass


class DegenerateReference(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class OutOfRange(ValidationError, IndexError):
    pass


class FormatError(ValidationError):
    """Malformed on-disk file; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=0):
        self.offset = int(offset)
        super().__init__(f"{message} (at byte offset {self.offset})")


class NumericalBreakdown(SpiralkitError, ArithmeticError):
    pass
