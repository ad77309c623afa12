"""Exception types raised by the monitoring library."""


class LiftguardError(Exception):
    """Base class for all library errors."""


class NonPositiveDepth(LiftguardError):
    """A projection or back-projection was asked for a point at or behind the image plane."""


class NonOrthonormalRotation(LiftguardError):
    """A rotation matrix failed the orthonormality / determinant check."""


class EmptyCloud(LiftguardError):
    """An operation that needs points received an empty cloud."""


class UnorderedStream(LiftguardError):
    """Timestamps in a supposedly time-ordered stream regressed."""


class MissingFrame(LiftguardError):
    """No recorded detections exist for the requested frame timestamp."""


class ZeroGroundTruth(LiftguardError):
    """Average precision requested for a class with no ground-truth boxes."""


class NoClasses(LiftguardError):
    """Mean AP requested over an empty class set."""


class TooFewSamples(LiftguardError):
    """Clustering requested with fewer samples than clusters."""


class EmptySamples(LiftguardError):
    """A depth statistic was requested on an empty sample set."""


class LengthMismatch(LiftguardError):
    """Paired sequences have different lengths."""


class EmptyTrack(LiftguardError):
    """A lift-procedure check was requested on an empty track."""


class InvalidSpec(LiftguardError):
    """A synthetic scene specification is out of range."""
