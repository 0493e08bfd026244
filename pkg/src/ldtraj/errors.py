"""Exception types shared across the package.

Every numerical failure that the CLI maps to exit code 3 derives from
``SolverFailure``; input problems derive from ``ValidationError`` (exit 2).
"""

import math


class LdtrajError(Exception):
    """Base class."""


class ValidationError(LdtrajError, ValueError):
    """Bad input. ``field`` names the offending entry, e.g. ``rates[0][2]``."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class ZeroMass(ValidationError):
    """A probability vector has a (numerically) zero entry where strict positivity is needed."""


class SupportViolation(ValidationError):
    """Tilted rates put mass on an edge the reference chain does not have."""


class WindowOverflow(ValidationError):
    """A dependence set does not fit on the torus."""


class SolverFailure(LdtrajError):
    """A numerical procedure did not produce an answer."""

    reason = "solver_failure"

    def as_dict(self):
        return {"error": self.reason, "message": str(self)}


class Infeasible(SolverFailure):
    """The Legendre supremum is +inf: the velocity needs flow along zero-rate edges."""

    reason = "infeasible"
    value = math.inf


class MomentumOverflow(SolverFailure):
    """A momentum difference exceeded the exponent range."""

    reason = "momentum_overflow"


class PositivityLoss(SolverFailure):
    """u = exp(f) left the positive orthant, so f = log u is undefined."""

    reason = "positivity_loss"


class MassDrift(SolverFailure):
    reason = "mass_drift"


class NoConvergence(SolverFailure):
    reason = "no_convergence"

    def __init__(self, message, best_residual=math.inf):
        self.best_residual = best_residual
        super().__init__(message)

    def as_dict(self):
        d = super().as_dict()
        d["best_residual"] = self.best_residual
        return d


class SingularBeyondKernel(SolverFailure):
    reason = "singular_beyond_kernel"
