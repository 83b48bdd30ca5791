"""Exception types raised across the package."""


class VmpError(ValueError):
    """Base class for invalid-input errors."""


class DomainError(VmpError):
    """A value lies outside the interval an operation is defined on."""


class InsufficientFramesError(VmpError):
    """Fewer frames than an operation needs."""


class ShapeMismatchError(VmpError):
    """Array dimensions of paired inputs do not agree."""


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite; ``state`` holds a snapshot."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state
