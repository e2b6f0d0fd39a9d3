"""Exception types shared across the package."""


class ApshomError(Exception):
    """Base class for all package-specific failures."""


class MismatchedModule(ApshomError):
    """Two trig polynomials over incompatible frequency modules were combined."""


class ZeroSpatialFrequency(ApshomError):
    """Poisson inversion requested for a frequency with vanishing spatial part."""


class SingularSystem(ApshomError):
    """Galerkin matrix is numerically singular; carries a condition estimate."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class TruncationOverflow(ApshomError):
    """Frequency truncation would discard too much mass to trust the result."""


class NoConvergence(ApshomError):
    """Fixed-point iteration exceeded its iteration cap."""


class Blowup(ApshomError):
    """A simulated field exceeded the blowup threshold (scheme failure)."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class StiffnessRejected(ApshomError):
    """Requested time step too coarse to resolve the fast-time oscillation."""


class AssumptionViolation(ApshomError):
    """An input violates one of the structural assumptions A1-A6."""

    def __init__(self, clause, message):
        super().__init__(f"{clause}: {message}")
        self.clause = clause
