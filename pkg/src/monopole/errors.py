"""Exception types raised across the package."""


class MonopoleError(Exception):
    """Base class for all package errors."""


class StringProximity(MonopoleError):
    """Point too close to the excluded negative last axis (Dirac string)."""

    def __init__(self, clearance, t=None, state=None):
        self.clearance = float(clearance)
        self.t = t
        self.state = state
        where = "" if t is None else f" at t={t:.17g}"
        super().__init__(f"string clearance {self.clearance:.3e} below guard{where}")


class ZeroRadius(MonopoleError):
    """Point at (or numerically indistinguishable from) the origin."""

    def __init__(self, radius, t=None, state=None):
        self.radius = float(radius)
        self.t = t
        self.state = state
        where = "" if t is None else f" at t={t:.17g}"
        super().__init__(f"radius {self.radius:.3e} below guard{where}")


class StepUnderflow(MonopoleError):
    """Adaptive step size collapsed below the minimum admissible step."""

    def __init__(self, dt, t=None, state=None):
        self.dt = float(dt)
        self.t = t
        self.state = state
        super().__init__(f"step size {self.dt:.3e} underflow at t={t!r}")


class ConeUndefined(MonopoleError):
    """Cone analysis requested for zero charge or a colliding orbit."""


class NotDecomposable(MonopoleError, ValueError):
    """3-vector is zero or not a wedge of three vectors."""


class ConfigError(MonopoleError, ValueError):
    """Invalid configuration document."""

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
