"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class VarxShmError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(VarxShmError, ValueError):
    """Invalid model, record or configuration input."""


class LengthMismatch(ValidationError):
    pass


class NonPositiveParameter(ValidationError):
    def __init__(self, field: str, index: int, value: float):
        self.field = field
        self.index = index
        self.value = value
        super().__init__(f"{field}[{index}] must be > 0, got {value!r}")


class IndexOutOfRange(ValidationError):
    pass


class SeverityOutOfRange(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class MissingChannel(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ChannelCountMismatch(ValidationError):
    pass


class StabilityViolation(VarxShmError):
    """Explicit step too large for the central-difference stability limit."""

    def __init__(self, step: float, bound: float):
        self.step = step
        self.bound = bound
        self.limit = 2.0 / bound
        super().__init__(
            f"integration step h={step:.6g} s violates h < 2/omega_max = {self.limit:.6g} s "
            f"(omega_max bound {bound:.6g} rad/s); decrease ts or increase substep_ratio "
            f"until ts/substep_ratio < {self.limit:.6g} s"
        )


class EstimationError(VarxShmError):
    """The regression cannot be solved from the given data."""


class TooFewSamples(EstimationError):
    pass


class RankDeficient(EstimationError):
    pass


class BaselineDegenerate(VarxShmError):
    pass


class TooFewRuns(VarxShmError):
    pass


class NotLocalized(VarxShmError):
    pass


class CalibrationFailed(VarxShmError):
    pass


class ScenarioError(VarxShmError):
    """Wraps a failure raised while executing one scenario."""

    def __init__(self, scenario: str, cause: Exception):
        self.scenario = scenario
        self.cause = cause
        super().__init__(f"scenario {scenario!r}: {type(cause).__name__}: {cause}")
