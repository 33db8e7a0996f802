"""Exception types shared across the package."""


class PinchbeamError(Exception):
    """Base class for domain-specific failures."""


class InfeasibleLadderError(PinchbeamError, ValueError):
    """The requested per-antenna power split cannot be realized in hardware."""


class DegenerateGeometryError(PinchbeamError):
    """A user sits on (or numerically too close to) an antenna position."""


class InfeasibleInstanceError(PinchbeamError):
    """The SINR-constrained power minimization has no usable solution."""


class SingularChannelError(PinchbeamError):
    """The effective channel Gram matrix is numerically singular."""


class ScaStallError(PinchbeamError):
    """The convexified channel update lost its descent direction."""


class ConfigError(PinchbeamError, ValueError):
    """An experiment configuration is malformed or inconsistent."""
