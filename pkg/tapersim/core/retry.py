"""Restart loop for iterative solvers that can run out of budget."""
import logging
from typing import Any, Callable, Optional

from tapersim.core.errors import ConvergenceError

BUDGET_GROWTH = 2


def retry_with_restarts(operation: Callable[[int, Optional[Any]], Any], description: str,
                        max_attempts: int = 3, base_budget: int = 200) -> Any:
    """Run `operation(budget, warm_start)` until it stops raising ConvergenceError.

    Each failed attempt hands its best-so-far state to the next one and the
    evaluation budget grows geometrically. The final ConvergenceError is
    re-raised unchanged so callers still see the best state.
    """
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    warm_start = None
    for attempt in range(max_attempts):
        budget = base_budget * BUDGET_GROWTH ** attempt
        try:
            return operation(budget, warm_start)
        except ConvergenceError as e:
            warm_start = e.best
            if attempt == max_attempts - 1:
                logging.error(f"{description} failed after {max_attempts} attempts "
                              f"(residual {e.residual:.3g})", extra={"attempt": attempt + 1})
                raise
            logging.warning(f"{description} did not converge (residual {e.residual:.3g}); "
                            f"restarting with budget {budget * BUDGET_GROWTH}",
                            extra={"attempt": attempt + 1})
