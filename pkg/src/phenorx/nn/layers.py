"""The layer set: each is either a primitive op with a hand-derived
backward pass (conv1d, max_pool1d, embedding_lookup, softmax,
cross_entropy) or a composite of tensor primitives (dense, gru_cell,
additive_attention). Shapes follow the (batch, channels, length)
convention for convolutional ops and (batch, features) elsewhere.
"""

from __future__ import annotations

import numpy as np

from .tensor import Parameter, Tensor, _store, precise_mode


def xavier_uniform(rng: np.random.Generator, shape: tuple[int, ...],
                   fan_in: int | None = None, fan_out: int | None = None) -> np.ndarray:
    """Glorot/Xavier uniform sample; fans default to the trailing two dims."""
    if fan_in is None:
        fan_in = shape[0] if len(shape) > 1 else shape[0]
    if fan_out is None:
        fan_out = shape[-1]
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        x._accumulate(g * mask)

    return Tensor._result(x.data * mask, (x,), backward, "relu")


def dense(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x @ weight + bias, with x (batch, in) and weight (in, out)."""
    out = x @ weight
    return out + bias if bias is not None else out


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Same-padded stride-1 1-D convolution.

    x: (batch, in_ch, length); weight: (out_ch, in_ch, kernel) with odd
    kernel so same-padding is symmetric. Accumulation runs in 64-bit via
    the im2col contraction.
    """
    if x.ndim != 3 or weight.ndim != 3:
        raise ValueError(f"conv1d needs 3-D input and weight, got {x.shape} and {weight.shape}")
    B, C, L = x.shape
    O, Cw, K = weight.shape
    if C != Cw:
        raise ValueError(f"conv1d channel mismatch: input {x.shape} vs weight {weight.shape}")
    if K % 2 != 1:
        raise ValueError(f"conv1d kernel must be odd for same-padding, got {K}")
    pad = K // 2
    # 64-bit accumulation under gradient verification; float32 BLAS on the
    # training fast path (the desk time budget; see the decision record)
    acc = np.float64 if precise_mode() else np.float32
    xp = np.zeros((B, C, L + 2 * pad), dtype=acc)
    xp[:, :, pad:L + pad] = x.data
    # im2col, flattened so the contraction is one BLAS matmul
    cols = np.lib.stride_tricks.sliding_window_view(xp, K, axis=2)  # (B, C, L, K)
    cols2 = cols.transpose(0, 2, 1, 3).reshape(B * L, C * K)
    w2 = weight.data.astype(acc).reshape(O, C * K)
    out = _store(np.ascontiguousarray((cols2 @ w2.T).reshape(B, L, O).transpose(0, 2, 1)), np.float32)

    def backward(g):
        g2 = np.ascontiguousarray(g.transpose(0, 2, 1).reshape(B * L, O), dtype=acc)
        weight._accumulate((g2.T @ cols2).reshape(O, C, K).astype(np.float64))
        dcols = (g2 @ w2).reshape(B, L, C, K).transpose(0, 2, 1, 3)
        dxp = np.zeros((B, C, L + 2 * pad), dtype=acc)
        for k in range(K):
            dxp[:, :, k:k + L] += dcols[:, :, :, k]
        x._accumulate(dxp[:, :, pad:L + pad])

    out = Tensor._result(out, (x, weight), backward, "conv1d")
    if bias is not None:
        out = out + bias.reshape(1, O, 1)
    return out


def max_pool1d(x: Tensor, width: int = 2) -> Tensor:
    """Non-overlapping max pooling along the last axis (floor division)."""
    if x.ndim != 3:
        raise ValueError(f"max_pool1d needs (batch, ch, length), got {x.shape}")
    B, C, L = x.shape
    Lp = L // width
    if Lp == 0:
        raise ValueError(f"max_pool1d: length {L} shorter than window {width}")
    windows = x.data[:, :, :Lp * width].reshape(B, C, Lp, width)
    arg = windows.argmax(axis=3)

    def backward(g):
        full = np.zeros((B, C, L), dtype=np.float64)
        b, c, p = np.indices((B, C, Lp))
        full[b, c, p * width + arg] = g
        x._accumulate(full)

    return Tensor._result(windows.max(axis=3), (x,), backward, "max_pool1d")


def global_avg_pool(x: Tensor) -> Tensor:
    """(batch, ch, length) -> (batch, ch) mean over the length axis."""
    if x.ndim != 3:
        raise ValueError(f"global_avg_pool needs (batch, ch, length), got {x.shape}")
    return x.mean(axis=2)


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather: table (vocab, dim), ids any integer shape -> ids.shape + (dim,)."""
    ids = np.asarray(ids)
    if ids.min() < 0 or ids.max() >= table.shape[0]:
        raise ValueError(f"embedding ids outside [0, {table.shape[0]})")

    def backward(g):
        full = np.zeros(table.shape, dtype=np.float64)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        table._accumulate(full)

    return Tensor._result(table.data[ids], (table,), backward, "embedding_lookup")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along one axis."""
    shifted = x.data.astype(np.float64)
    shifted = shifted - shifted.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * p).sum(axis=axis, keepdims=True)
        x._accumulate(p * (g - inner))

    return Tensor._result(_store(p, np.float32), (x,), backward, "softmax")


_CE_FLOOR = 1e-30  # keeps log finite if a true-class probability underflows


def cross_entropy(probs: Tensor, labels: np.ndarray, weights: np.ndarray | None = None,
                  reduction: str = "mean") -> Tensor:
    """Categorical cross-entropy −log p[label] on probability rows.

    probs: (batch, classes); labels: (batch,) ints; optional non-negative
    per-example weights. Reduction "mean" is the weighted mean, "sum" the
    weighted sum, "none" the per-example vector.
    """
    labels = np.asarray(labels)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ValueError(f"cross_entropy shapes: probs {probs.shape}, labels {labels.shape}")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ValueError(f"label outside [0, {probs.shape[1]})")
    n = probs.shape[0]
    rows = np.arange(n)
    w = np.ones(n, dtype=np.float64) if weights is None else np.asarray(weights, dtype=np.float64)
    picked = np.maximum(probs.data[rows, labels].astype(np.float64), _CE_FLOOR)
    losses = -np.log(picked)
    if reduction == "none":
        scale = w

        def backward_none(g):
            full = np.zeros(probs.shape, dtype=np.float64)
            full[rows, labels] = -scale * g / picked
            probs._accumulate(full)

        return Tensor._result(losses * w, (probs,), backward_none, "cross_entropy")
    denom = w.sum() if reduction == "mean" else 1.0
    if denom == 0.0:
        raise ValueError("cross_entropy: weights sum to zero")
    value = (losses * w).sum() / denom
    scale = w / denom

    def backward(g):
        full = np.zeros(probs.shape, dtype=np.float64)
        full[rows, labels] = -scale * float(g) / picked
        probs._accumulate(full)

    return Tensor._result(value, (probs,), backward, "cross_entropy")


def gru_cell(x: Tensor, h: Tensor, w_x: Tensor, w_h: Tensor, bias: Tensor) -> Tensor:
    """One GRU step: x (batch, in), h (batch, hidden) -> new hidden.

    Gate order in the packed weights is [update z | reset r | candidate n]:
    w_x (in, 3H), w_h (hidden, 3H), bias (3H,).
    """
    H = h.shape[1]
    if w_x.shape != (x.shape[1], 3 * H) or w_h.shape != (H, 3 * H) or bias.shape != (3 * H,):
        raise ValueError(
            f"gru_cell shapes: x {x.shape}, h {h.shape}, w_x {w_x.shape}, "
            f"w_h {w_h.shape}, bias {bias.shape}"
        )
    gx = x @ w_x + bias
    gh = h @ w_h
    z = (gx[:, :H] + gh[:, :H]).sigmoid()
    r = (gx[:, H:2 * H] + gh[:, H:2 * H]).sigmoid()
    n = (gx[:, 2 * H:] + r * gh[:, 2 * H:]).tanh()
    return (1.0 - z) * n + z * h


def additive_attention(query: Tensor, keys: Tensor, values: Tensor,
                       w_q: Tensor, w_k: Tensor, v: Tensor,
                       mask: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
    """Bahdanau attention: score(q, k) = vᵀ tanh(W_q q + W_k k).

    query (B, H); keys/values (B, T, H); mask (B, T) with 1 = attend.
    Returns (context (B, H), weights (B, T)).
    """
    if keys.ndim != 3 or values.ndim != 3 or query.ndim != 2:
        raise ValueError(
            f"attention shapes: query {query.shape}, keys {keys.shape}, values {values.shape}"
        )
    B, T, H = keys.shape
    A = w_q.shape[1]
    q_proj = (query @ w_q).reshape(B, 1, A)
    k_proj = (keys.reshape(B * T, H) @ w_k).reshape(B, T, A)
    scores = ((q_proj + k_proj).tanh().reshape(B * T, A) @ v.reshape(A, 1)).reshape(B, T)
    if mask is not None:
        keep = np.asarray(mask, dtype=np.float32)
        scores = scores * keep + Tensor((1.0 - keep) * -1e9)
    weights = softmax(scores, axis=1)
    context = (weights.reshape(B, T, 1) * values).sum(axis=1)
    return context, weights
