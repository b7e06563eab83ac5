"""Exception types shared across the package."""


class NullCtrlError(Exception):
    """Base class for every error raised by nullctrl."""


class StateEscapeError(NullCtrlError):
    """Trajectory left the ball on which the system constants are valid."""


class NonfiniteStateError(NullCtrlError):
    pass


class NotControllableError(NullCtrlError):
    pass


class SingularGramianError(NullCtrlError):
    pass


class PrecisionLossError(NullCtrlError):
    pass


class DegenerateFitError(NullCtrlError):
    pass


class CoincidentNodesError(NullCtrlError):
    pass


class EmptySetError(NullCtrlError):
    pass


class BandLimitError(NullCtrlError):
    """A frequency above the declared band limit was supplied."""


class IllConditionedError(NullCtrlError):
    pass


class BlowUpError(NullCtrlError):
    pass


class InvalidConstantsError(NullCtrlError):
    pass


class NonContractionError(NullCtrlError):
    pass


class DivergenceError(NullCtrlError):
    pass


class InconclusiveOrderError(NullCtrlError):
    pass


class OutOfBallError(NullCtrlError):
    pass


class ContractionFailureError(NullCtrlError):
    pass


class BasinEscapeError(NullCtrlError):
    pass


class ConfigError(NullCtrlError):
    pass
