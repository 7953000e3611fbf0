"""Exception hierarchy shared by all modules."""


class GeometryError(Exception):
    """Base class for every error raised by paramgeom."""


class DegenerateMetric(GeometryError):
    """Metric determinant at or below the degeneracy threshold."""


class DomainViolation(GeometryError):
    """A point (or a finite-difference stencil point) lies outside the field domain."""


class GridTooSmall(GeometryError):
    pass


class WrongPhase(GeometryError):
    """Parameters lie on the other side of the critical point."""


class CriticalPoint(GeometryError):
    """Parameters sit exactly on the phase transition."""


class AngleSingular(GeometryError):
    """Normal-mode rotation angle undefined (resonance)."""


class SolverFailure(GeometryError):
    pass


class DegenerateGroundState(GeometryError):
    pass


class ProbeDegenerate(GeometryError):
    pass


class DeltaTooLarge(GeometryError):
    pass


class IllConditionedProjection(GeometryError):
    pass


class DcLeakage(GeometryError):
    pass


class SingularFit(GeometryError):
    pass


class NoBracket(GeometryError):
    pass


class NearDegeneracyWarning(UserWarning):
    """Ground-state gap is small enough that the QMT may be inaccurate."""
