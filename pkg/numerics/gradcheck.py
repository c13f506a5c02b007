from __future__ import annotations

import logging
from typing import Callable, Mapping, NamedTuple

import numpy as np

from errors import ContractError
from .autodiff import Graph, Tensor, backward

__all__ = ('GradCheckReport', 'grad_check')

logger = logging.getLogger(__name__)

LossBuilder = Callable[[Graph], Tensor]


class GradCheckReport(NamedTuple):
    """Per-parameter maximum relative error between analytic and numeric gradients."""

    errors: dict[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(error < self.tolerance for error in self.errors.values())

    @property
    def worst(self) -> float:
        return max(self.errors.values(), default=0.0)

    def failures(self) -> list[str]:
        return [name for name, error in self.errors.items() if not error < self.tolerance]

    def __repr__(self) -> str:
        status = 'pass' if self.passed else 'FAIL'
        return f'<GradCheckReport {status} worst={self.worst:.3e} tolerance={self.tolerance:.1e}>'


def _evaluate(build: LossBuilder, params: Mapping[str, np.ndarray]) -> float:
    graph = Graph()
    graph.parameters(params)
    return float(build(graph).data)


def grad_check(
    build: LossBuilder,
    params: Mapping[str, np.ndarray],
    *,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    analytic: Mapping[str, np.ndarray] | None = None,
    floor: float = 1e-6,
) -> GradCheckReport:
    """Compare reverse-mode gradients against central finite differences.

    Parameters
    ----------
    build: Callable[[Graph], Tensor]
        Builds the scalar loss from the parameters registered on the graph it
        receives (``graph.params[name]``).
    params: Mapping[str, np.ndarray]
        Point at which gradients are compared.
    step: float
        Finite-difference step, strictly positive.
    tolerance: float
        Maximum accepted relative error.
    analytic: Mapping[str, np.ndarray] | None
        Gradients to test instead of those produced by ``backward``.
    floor: float
        Lower bound on the relative-error denominator so vanishing gradients
        are compared in absolute terms.
    """
    if not step > 0:
        raise ContractError(f'finite-difference step must be positive, got {step}')
    params = {name: np.array(value, dtype=np.float64) for name, value in params.items()}

    if analytic is None:
        graph = Graph()
        graph.parameters(params)
        analytic = backward(graph, build(graph))

    errors: dict[str, float] = {}
    for name, value in params.items():
        numeric = np.zeros_like(value)
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + step
            upper = _evaluate(build, params)
            value[index] = original - step
            lower = _evaluate(build, params)
            value[index] = original
            numeric[index] = (upper - lower) / (2.0 * step)

        exact = np.asarray(analytic[name], dtype=np.float64)
        scale = np.maximum(np.maximum(np.abs(exact), np.abs(numeric)), floor)
        errors[name] = float(np.max(np.abs(exact - numeric) / scale)) if value.size else 0.0

    report = GradCheckReport(errors=errors, tolerance=tolerance)
    if not report.passed:
        logger.warning(f'Gradient check failed for {report.failures()} (worst {report.worst:.3e})')
    return report
