"""Exception taxonomy.

Every error the package raises belongs to exactly one of the categories
below; the CLI maps each category to a documented exit code
(config -> 2, step size / CFL -> 3, linear solver -> 4, iteration -> 5).
"""


class RHLabError(Exception):
    """Base class for all package errors."""


class ConfigError(RHLabError):
    """Invalid configuration, parameters, or structurally inconsistent inputs.

    Carries an optional list of ``(line, message)`` violations when raised
    by the config parser.
    """

    exit_code = 2

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else []


class ParameterError(ConfigError):
    """A scalar parameter is outside its admissible range."""


class DomainError(ConfigError):
    """Field values outside the physical domain of an operation (e.g. rho < 0)."""


class ShapeError(ConfigError):
    """Array shape inconsistent with the grid or quadrature."""


class StepSizeError(RHLabError):
    """A CFL or step-size precondition was violated.  Never silently clamped."""

    exit_code = 3


class SolverError(RHLabError):
    """Linear solver failed to reach the required residual."""

    exit_code = 4

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class IterationError(RHLabError):
    """Fixed-point iteration failed to converge after slab halving."""

    exit_code = 5

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
