"""Exception hierarchy shared by all modules."""


class BMKError(Exception):
    """Base class for every error raised by the package."""


class GridResolutionError(BMKError, ValueError):
    pass


class ShapeMismatch(BMKError, ValueError):
    pass


class PositivityViolation(BMKError):
    pass


class ConvexityViolation(BMKError):
    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class DegenerateBody(BMKError):
    pass


class SymmetryViolation(BMKError, ValueError):
    pass


class AssemblyAsymmetry(BMKError):
    pass


class EigensolveFailure(BMKError):
    pass


class CrossCheckMismatch(BMKError):
    pass


class StructureViolation(BMKError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class ZeroField(BMKError, ValueError):
    pass


class NewtonDivergence(BMKError):
    pass


class JacobianSingular(BMKError):
    pass


class ContinuationStall(BMKError):
    pass


class CatalogError(BMKError, ValueError):
    pass


class ConfigError(BMKError, ValueError):
    pass
