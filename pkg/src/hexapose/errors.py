"""Exception hierarchy.

Every error raised by the library derives from :class:`HexaposeError` so
callers (and the command line) can separate physics/data problems from
ordinary programming errors.
"""


class HexaposeError(Exception):
    """Base class for all library errors."""


class GimbalLockError(HexaposeError):
    """Rotation too close to |ry| = pi/2 to extract fixed-axis XYZ angles."""


class DegenerateGeometryError(HexaposeError):
    """Hexapod joints coincide or the geometry violates its invariants."""


class NoConvergenceError(HexaposeError):
    """An iterative solver failed to reach its tolerance."""


class SanityBoundError(HexaposeError):
    """A leg deflection is too large to be thermal (|dq| >= 1 mm)."""


class NonPositiveSegmentError(HexaposeError):
    """The Steel segment of a leg would have zero or negative length."""


class DegeneratePointsError(HexaposeError):
    """Probe points do not determine a sphere (too few, coplanar, coincident)."""


class CollinearBallsError(HexaposeError):
    """The three ball centres do not span a triangle."""


class ShapeMismatchError(HexaposeError):
    """Measured ball triangle is not congruent to the stored one."""


class MissingTargetError(HexaposeError):
    """The session holds no Target record (or not the one requested)."""


class MissingReferenceError(HexaposeError):
    """The session lacks the reference measurements the method needs."""


class ScheduleGapError(HexaposeError):
    """A heating schedule does not cover the requested instant."""


class SchemaError(HexaposeError):
    """A data file is malformed, has the wrong version, or lacks units."""
