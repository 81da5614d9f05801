"""Exception hierarchy shared by every quakenet module."""


class QuakeNetError(Exception):
    """Base class for all quakenet errors."""


class GeometryError(QuakeNetError, ValueError):
    """Degenerate or invalid geometric input (collinear hull, self-intersection, ...)."""


class ConvexityRequired(QuakeNetError):
    """A closed-form result was requested for a non-convex disaster area."""


class DomainError(QuakeNetError, ValueError):
    """Argument outside the domain of a formula."""


class AssumptionViolated(QuakeNetError):
    """A formula's geometric precondition (e.g. segment separation) does not hold."""


class ApproximationError(QuakeNetError):
    """The small-failure-count regime required by an approximation is badly violated."""


class ScenarioError(QuakeNetError):
    """Scenario document failed parsing or validation.

    ``errors`` holds one ``"path: message"`` string per violation.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
