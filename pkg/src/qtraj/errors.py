"""Exception hierarchy."""


class QTrajError(Exception):
    """Base class for all library errors."""


class DimensionError(QTrajError, ValueError):
    """Invalid truncation dimension or mismatched operator/state shapes."""


class DegenerateStateError(QTrajError, ValueError):
    """Attempt to normalize a zero vector."""


class NumericalBlowupError(QTrajError, FloatingPointError):
    def __init__(self, t, message="non-finite amplitudes"):
        self.t = t
        super().__init__(f"{message} at t={t:.17g}")


class DegenerateJumpError(QTrajError):
    def __init__(self, channel, t):
        self.channel = channel
        self.t = t
        super().__init__(f"jump on channel {channel} with vanishing rate at t={t:.17g}")


class PhaseSingularityError(QTrajError):
    def __init__(self, channel, t):
        self.channel = channel
        self.t = t
        super().__init__(f"<L_{channel}> vanishes at t={t:.17g}; diffusive phase undefined")


class StepSizeError(QTrajError):
    """Trace drift per master-equation step exceeded its bound."""


class FrameTruncationError(QTrajError):
    def __init__(self, tail, t=None):
        self.tail = tail
        self.t = t
        where = "" if t is None else f" at t={t:.17g}"
        super().__init__(f"displaced-frame tail mass {tail:.3g} exceeds bound{where}")


class UndersampledError(QTrajError, ValueError):
    """Strobe period too short for the record's sampling interval."""


class InvalidWindowError(QTrajError, ValueError):
    """Empty or inverted time window."""


class ConfigError(QTrajError, ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class TrajectoryFailure(QTrajError):
    """A stepper error raised inside an ensemble, tagged with its stream."""

    def __init__(self, stream_id, t, cause):
        self.stream_id = stream_id
        self.t = t
        self.cause = cause
        super().__init__(f"trajectory {stream_id} failed at t={t}: {cause}")
