from __future__ import annotations

from enum import Enum
from typing import Mapping

import numpy as np

from errors import ConfigError, DimensionError

__all__ = ('OptimizerKind', 'OptimizerState', 'step')


class OptimizerKind(Enum):
    sgd_momentum = 'sgd-momentum'
    adam = 'adam'


class OptimizerState:
    """First-order optimizer state with one slot set per parameter.

    Parameters
    ----------
    kind: OptimizerKind
        ``sgd_momentum`` (``v <- mu v + g; p <- p - lr v``) or ``adam`` (bias corrected).
    learning_rate: float
        Strictly positive step size.
    momentum: float
        ``mu`` for SGD with momentum.
    beta1, beta2, eps: float
        Adam moment decay rates and denominator guard.
    """

    __slots__ = ('kind', 'learning_rate', 'momentum', 'beta1', 'beta2', 'eps', 'slots', 't')

    def __init__(
        self,
        kind: OptimizerKind | str = OptimizerKind.adam,
        *,
        learning_rate: float = 1e-3,
        momentum: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        if not learning_rate > 0:
            raise ConfigError(f'learning rate must be positive, got {learning_rate}')
        self.kind: OptimizerKind = OptimizerKind(kind)
        self.learning_rate: float = float(learning_rate)
        self.momentum: float = float(momentum)
        self.beta1: float = float(beta1)
        self.beta2: float = float(beta2)
        self.eps: float = float(eps)
        self.slots: dict[str, dict[str, np.ndarray]] = {}
        self.t: int = 0

    @classmethod
    def sgd(cls, learning_rate: float, momentum: float = 0.0) -> OptimizerState:
        return cls(OptimizerKind.sgd_momentum, learning_rate=learning_rate, momentum=momentum)

    @classmethod
    def adam(cls, learning_rate: float = 1e-3) -> OptimizerState:
        return cls(OptimizerKind.adam, learning_rate=learning_rate)

    def _slot(self, name: str, shape: tuple[int, ...]) -> dict[str, np.ndarray]:
        slot = self.slots.get(name)
        if slot is None:
            keys = ('velocity',) if self.kind is OptimizerKind.sgd_momentum else ('m', 'v')
            slot = self.slots[name] = {key: np.zeros(shape) for key in keys}
        elif next(iter(slot.values())).shape != shape:
            raise DimensionError(f'optimizer slot for {name!r} has shape {next(iter(slot.values())).shape}, parameter has {shape}')
        return slot

    def __repr__(self) -> str:
        return f'<OptimizerState kind={self.kind.value} lr={self.learning_rate} t={self.t}>'


def step(
    opt: OptimizerState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
) -> dict[str, np.ndarray]:
    """Apply one update and return new parameter arrays.

    Parameters without a gradient entry are passed through unchanged.
    """
    opt.t += 1
    updated: dict[str, np.ndarray] = {}
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            updated[name] = value
            continue
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != value.shape:
            raise DimensionError(f'gradient for {name!r} has shape {grad.shape}, parameter has {value.shape}')
        slot = opt._slot(name, value.shape)

        if opt.kind is OptimizerKind.sgd_momentum:
            slot['velocity'] = opt.momentum * slot['velocity'] + grad
            updated[name] = value - opt.learning_rate * slot['velocity']
            continue

        slot['m'] = opt.beta1 * slot['m'] + (1.0 - opt.beta1) * grad
        slot['v'] = opt.beta2 * slot['v'] + (1.0 - opt.beta2) * grad * grad
        m_hat = slot['m'] / (1.0 - opt.beta1 ** opt.t)
        v_hat = slot['v'] / (1.0 - opt.beta2 ** opt.t)
        updated[name] = value - opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.eps)
    return updated
