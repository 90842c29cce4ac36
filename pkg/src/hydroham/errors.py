"""Exception hierarchy shared by all hydroham modules."""


class HydroHamError(Exception):
    """Base class for every error raised by the package."""


class DivisionByZero(HydroHamError, ZeroDivisionError):
    pass


class ExprSyntaxError(HydroHamError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownVariable(HydroHamError, ValueError):
    def __init__(self, name, offset=None):
        where = "" if offset is None else f" (at offset {offset})"
        super().__init__(f"unknown variable {name!r}{where}")
        self.name = name
        self.offset = offset


class JetOrderExceeded(HydroHamError):
    pass


class InhomogeneousInput(HydroHamError, ValueError):
    pass


class NotHamiltonian(HydroHamError):
    pass


class UnsupportedDegree(HydroHamError, ValueError):
    pass


class SingularPencil(HydroHamError):
    pass


class DegenerateTensor(HydroHamError):
    pass


class InconsistentVQ(HydroHamError):
    pass


class PreconditionFailed(HydroHamError):
    pass


class Incompatible(HydroHamError):
    """A hydrodynamic flow is not compatible with a structure.

    ``residual`` holds the nonzero components of d_nabla X as a dict
    ``{(alpha, beta, gamma): coefficient}``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual or {}


class NotClosed(HydroHamError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual or {}


class NonIntegrable(HydroHamError):
    pass


class NonPolynomial(HydroHamError):
    pass


class NotInverse(HydroHamError):
    pass


class PDEViolation(HydroHamError):
    def __init__(self, equation, indices, residual=None):
        super().__init__(f"PDE violated: {equation} at indices {indices}")
        self.equation = equation
        self.indices = indices
        self.residual = residual


class ManifestError(HydroHamError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
