"""Central-difference gradient verification.

The forward pass still runs in the engine's 32-bit storage; the
differences themselves are taken in 64-bit, and the realized step size
is measured from the perturbed float32 values so storage rounding does
not bias the quotient.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .optim import zero_grad
from .tensor import Parameter, Tensor, precise64


def grad_check(f: Callable[[], Tensor], params: list[Parameter],
               eps: float = 1e-3, max_entries: int = 64,
               seed: int = 0) -> float:
    """Max relative error between analytic and numeric gradients.

    f rebuilds the (deterministic) scalar loss from the current parameter
    values. Both passes run under precise64 so the comparison measures
    the gradient, not float32 activation rounding. For parameters larger
    than max_entries, a seeded subset of entries is probed. Relative
    error uses |a−n| / max(|a|+|n|, 1e-8).
    """
    with precise64():
        zero_grad(params)
        loss = f()
        if loss.size != 1:
            raise ValueError(f"grad_check needs a scalar loss, got shape {loss.shape}")
        loss.backward()
        analytic = [np.zeros(p.shape, dtype=np.float64) if p.grad is None else p.grad.copy()
                    for p in params]
        worst = _numeric_pass(f, params, analytic, eps, max_entries, seed)
    zero_grad(params)
    return worst


def _numeric_pass(f, params, analytic, eps, max_entries, seed) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, ref in zip(params, analytic):
        flat = p.data.reshape(-1)
        ref_flat = ref.reshape(-1)
        idx = np.arange(flat.size)
        if flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = np.float32(orig + eps)
            hi = float(flat[i])
            f_hi = float(f().data)
            flat[i] = np.float32(orig - eps)
            lo = float(flat[i])
            f_lo = float(f().data)
            flat[i] = orig
            numeric = (f_hi - f_lo) / (hi - lo)
            err = abs(ref_flat[i] - numeric) / max(abs(ref_flat[i]) + abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
