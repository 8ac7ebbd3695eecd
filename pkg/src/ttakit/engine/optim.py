"""SGD with momentum and weight decay.

Update rule, per parameter:

    buf   <- momentum * buf + (grad + weight_decay * param)
    param <- param - lr * buf

Momentum buffers live in float64 and start at zero; parameters keep their
storage dtype (float32 for model weights).
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..errors import ContractError
from .tensor import Tensor

__all__ = ["SgdState", "sgd_step"]


class SgdState:
    """Hyperparameters plus one momentum buffer per adapted parameter."""

    def __init__(self, lr: float, momentum: float = 0.0, weight_decay: float = 0.0):
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.weight_decay = float(weight_decay)
        self.buffers: dict[str, np.ndarray] = {}

    def buffer(self, name: str, shape) -> np.ndarray:
        if name not in self.buffers:
            self.buffers[name] = np.zeros(shape, dtype=np.float64)
        return self.buffers[name]


def sgd_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray],
             state: SgdState) -> None:
    """Apply one momentum-SGD update in place."""
    for name, p in params.items():
        if name not in grads:
            raise ContractError(f"missing gradient for parameter {name!r}")
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.data.shape:
            raise ContractError(
                f"gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}")
        buf = state.buffer(name, p.data.shape)
        buf *= state.momentum
        buf += g + state.weight_decay * p.data
        p.data = (p.data - state.lr * buf).astype(p.data.dtype)
