"""Error hierarchy shared by the core modules, the services and both front ends."""

from typing import Any, Optional


class ModelError(Exception):
    """Base class for every error raised by the workbench."""


class ValidationFailure(ModelError, ValueError):
    """Malformed input: wrong shapes, out-of-range digits, vectors outside V."""


class InvalidParameterError(ValidationFailure):
    pass


class DimensionMismatchError(ValidationFailure):
    pass


class TensorValidationError(ValidationFailure):
    def __init__(self, message: str, column: int, total: Any, tensor_index: Optional[int] = None):
        super().__init__(message)
        self.column = column
        self.total = total
        self.tensor_index = tensor_index


class DependentBasisError(ValidationFailure):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class PhiRangeError(ValidationFailure):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class NotInSubspaceError(ValidationFailure):
    pass


class SobolevViolationError(ValidationFailure):
    def __init__(self, message: str, level: int, atom: Any):
        super().__init__(message)
        self.level = level
        self.atom = atom


class DepthTooLargeError(ValidationFailure):
    pass


class ConfigValidationError(ValidationFailure):
    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class PreconditionError(ModelError):
    """The inputs are well formed but the requested construction does not apply."""


class ExtensionError(PreconditionError):
    def __init__(self, message: str, vector: Any = None, value: Any = None):
        super().__init__(message)
        self.vector = vector
        self.value = value


class WeakCancellationError(PreconditionError):
    def __init__(self, message: str, witness: Any):
        super().__init__(message)
        self.witness = witness


class WeakCancellationHoldsError(PreconditionError):
    pass


class NoBlowUpError(PreconditionError):
    pass


class TranslationInvarianceError(PreconditionError):
    pass


class GroupMismatchError(PreconditionError):
    pass


class InvariantBreachError(ModelError):
    """An identity that must hold exactly was observed to fail."""
