"""Exception hierarchy shared by the simulation stack and the CLI."""
from typing import Any, Optional


class TapersimError(Exception):
    """Base for all tapersim failures."""


class ConfigError(TapersimError):
    """Invalid configuration or usage. CLI exit status 2."""


class GridMismatchError(ValueError):
    """Two objects that must share a transverse grid do not."""


class PhysicsError(TapersimError):
    """The model itself failed (cutoff, non-convergence). CLI exit status 3."""


class CutoffError(PhysicsError):
    """No guided mode: beta^2 does not exceed (k0 * n_clad)^2."""


class ModeNotContainedError(PhysicsError):
    """A mode's 1/e^2 crossings fall outside the grid, or the intensity is empty."""


class ConvergenceError(PhysicsError):
    """An iterative solver ran out of budget.

    Carries the last residual and, for optimizers, the best state seen so far
    so callers can warm-start a retry.
    """

    def __init__(self, message: str, residual: float = float("nan"),
                 iterations: int = 0, best: Optional[Any] = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.best = best


class CalibrationError(PhysicsError):
    """Calibration did not reach its residual tolerance; `result` is the best-so-far."""

    def __init__(self, message: str, result: Any):
        super().__init__(message)
        self.result = result
