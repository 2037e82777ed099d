"""Exception hierarchy shared by all modules."""


class ScrewDynError(ValueError):
    """Base class for every domain error raised by screwdyn."""


class NotSkew(ScrewDynError):
    pass


class NotOrthonormal(ScrewDynError):
    pass


class GimbalLock(ScrewDynError):
    """Euler-angle rate matrix is (numerically) singular."""


class PiRotation(ScrewDynError):
    """Rotation by pi has no finite Fedorov vector-parameter."""


class NotUnit(ScrewDynError):
    pass


class CoincidentPoints(ScrewDynError):
    pass


class RankDeficient(ScrewDynError):
    pass


class SingularGram(ScrewDynError):
    pass


class EmptyDistribution(ScrewDynError):
    pass


class SingularInertia(ScrewDynError):
    pass


class SingularMass(ScrewDynError):
    pass


class DegenerateSelection(ScrewDynError):
    pass


class QuaternionLagrange(ScrewDynError):
    """Lagrange form requested with quaternion coordinates (singular mass matrix)."""


class IncorrectContinuum(ScrewDynError):
    """Constitutive relation is not invertible: (r1 tr I + r2) r2 r3 == 0."""


class DegenerateCoeffs(ScrewDynError):
    pass


class DegenerateU(ScrewDynError):
    pass


class GridTooSmall(ScrewDynError):
    pass


class NonFinite(ScrewDynError):
    """Integration produced a non-finite state."""

    def __init__(self, message, t_last=None, state_last=None):
        super().__init__(message)
        self.t_last = t_last
        self.state_last = state_last


class ConfigError(ScrewDynError):
    pass


class IntegrationFailure(ScrewDynError):
    """A domain error raised while stepping, annotated with the last completed time."""

    def __init__(self, message, t_last=None, cause=None):
        super().__init__(message)
        self.t_last = t_last
        self.cause = cause
