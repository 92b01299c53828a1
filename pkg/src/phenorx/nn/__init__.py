from .tensor import NonFiniteError, Parameter, Tensor, autograd_enabled, no_grad, precise64
from .layers import (
    additive_attention,
    conv1d,
    cross_entropy,
    dense,
    embedding_lookup,
    global_avg_pool,
    gru_cell,
    max_pool1d,
    relu,
    softmax,
    xavier_uniform,
)
from .optim import Adam, clip_global_norm, zero_grad
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "NonFiniteError", "Parameter", "Tensor", "autograd_enabled", "no_grad",
    "additive_attention", "conv1d", "cross_entropy", "dense",
    "embedding_lookup", "global_avg_pool", "gru_cell", "max_pool1d", "relu",
    "softmax", "xavier_uniform", "Adam", "clip_global_norm", "zero_grad",
    "grad_check", "load_checkpoint", "save_checkpoint",
]
