"""Exception types shared across the package."""


class SimcurvError(Exception):
    """Base class for numerical failures raised by this package."""


class IntegrationError(SimcurvError):
    """Adaptive integration could not complete within its budget."""


class ShootingError(SimcurvError):
    """The shooting solver failed to converge to the boundary conditions."""


class GeometryError(SimcurvError):
    """Degenerate geometric data (metric not positive definite etc.)."""


class NodeEvaluationError(SimcurvError):
    """A grid-node evaluation failed; carries the offending coordinates."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
