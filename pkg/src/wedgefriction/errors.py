"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid body, gas, numerical or study configuration."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ContractViolation(ValueError):
    """A caller-side precondition was not met."""


class MultipleRecollisionError(RuntimeError):
    """A backward trace found a second bounce, which the geometry forbids."""


class QuadratureConvergenceError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message, estimate, residual):
        super().__init__(f"{message} (estimate={estimate!r}, residual={residual!r})")
        self.estimate = estimate
        self.residual = residual


class EstimationError(RuntimeError):
    """Monte Carlo estimation could not be carried out."""

    def __init__(self, message, stratum=None):
        super().__init__(message)
        self.stratum = stratum


class ObstructionViolation(RuntimeError):
    """dΔg/dT was found non-positive where it must be strictly positive."""

    def __init__(self, message, points):
        super().__init__(f"{message}: {points}")
        self.points = points


class UnboundedVelocityError(RuntimeError):
    """No sign change of the force balance below the velocity cap."""


class NonMonotoneError(RuntimeError):
    """The force balance is not strictly decreasing across the bracket."""
