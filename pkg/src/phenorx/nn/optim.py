"""Adam with bias correction, global-norm gradient clipping, and the
grad-zeroing helper. Moment buffers and the norm accumulate in 64-bit;
parameter storage stays 32-bit.
"""

from __future__ import annotations

import numpy as np

from .tensor import NonFiniteError, Parameter


def zero_grad(params: list[Parameter]) -> None:
    for p in params:
        p.grad = None


def clip_global_norm(params: list[Parameter], max_norm: float) -> float:
    """Rescale all gradients by max_norm/‖g‖ when the joint norm exceeds
    max_norm; returns the pre-clip norm."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


class Adam:
    """Standard Adam (Kingma & Ba) over a fixed parameter list."""

    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._t = [0] * len(self.params)
        self._m = [np.zeros(p.shape, dtype=np.float64) for p in self.params]
        self._v = [np.zeros(p.shape, dtype=np.float64) for p in self.params]

    def step(self) -> None:
        for i, (p, m, v) in enumerate(zip(self.params, self._m, self._v)):
            if p.grad is None:
                continue
            if not np.isfinite(p.grad).all():
                raise NonFiniteError("non-finite gradient in Adam step")
            self._t[i] += 1
            t = self._t[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad**2
            update = self.lr * (m / (1.0 - self.beta1**t)) / (
                np.sqrt(v / (1.0 - self.beta2**t)) + self.eps)
            p.data = (p.data.astype(np.float64) - update).astype(np.float32)
