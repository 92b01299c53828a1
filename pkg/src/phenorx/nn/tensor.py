"""Reverse-mode automatic differentiation on NumPy arrays.

Values are stored as 32-bit floats; gradients and the accumulations
inside matmul and reductions run in 64-bit. Every op validates that its
output is finite — NaN or Inf anywhere is a hard error, so a diverging
training run fails loudly instead of silently poisoning checkpoints.

The backward pass orders the graph iteratively (depth-first with an
explicit stack) because recurrent models unroll into graphs deeper than
the interpreter's recursion limit.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np


class NonFiniteError(FloatingPointError):
    """A tensor op produced NaN or Inf."""


_GRAD_ENABLED = [True]
_PRECISE = [False]


def autograd_enabled() -> bool:
    return _GRAD_ENABLED[0]


@contextmanager
def no_grad():
    """Disable graph construction (inference / evaluation loops)."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def precise_mode() -> bool:
    return _PRECISE[-1]


@contextmanager
def precise64():
    """Suspend float32 storage downcasts (gradient verification).

    Parameters keep their float32 values — only intermediate results stay
    in 64-bit — so the graph still evaluates the float32-parameterized
    function, just without activation rounding.
    """
    _PRECISE.append(True)
    try:
        yield
    finally:
        _PRECISE.pop()


def _store(data: np.ndarray, dtype) -> np.ndarray:
    """Downcast an internal 64-bit result for storage unless in precise mode."""
    return data if _PRECISE[-1] else data.astype(dtype, copy=False)


def _check_finite(data: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(data).all():
        raise NonFiniteError(f"{op} produced non-finite values")
    return data


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """A node in the autodiff graph wrapping a float32 ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float32)
        _check_finite(self.data, "tensor")
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- graph plumbing --------------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: tuple["Tensor", ...], backward, op: str) -> "Tensor":
        # reductions hand in float64 and keep it (64-bit accumulation results,
        # e.g. losses); everything else stores float32
        data = np.asarray(data)
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float32)
        out = Tensor.__new__(Tensor)
        out.data = _check_finite(data, op)
        out.grad = None
        out._parents = ()
        out._backward = None
        out.requires_grad = False
        if _GRAD_ENABLED[0] and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros(self.data.shape, dtype=np.float64)
        self.grad += grad

    def backward(self) -> None:
        """Reverse pass from a scalar root; gradients accumulate additively."""
        if self.data.size != 1:
            raise ValueError(f"backward root must be scalar, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones(self.data.shape, dtype=np.float64))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- introspection ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        grad = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{grad})"

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- arithmetic --------------------------------------------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float32))

    def __add__(self, other):
        other = self._lift(other)

        def backward(g):
            self._accumulate(_unbroadcast(g, self.shape))
            other._accumulate(_unbroadcast(g, other.shape))

        return self._result(self.data + other.data, (self, other), backward, "add")

    __radd__ = __add__

    def __neg__(self):
        def backward(g):
            self._accumulate(-g)

        return self._result(-self.data, (self,), backward, "neg")

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        other = self._lift(other)

        def backward(g):
            self._accumulate(_unbroadcast(g * other.data, self.shape))
            other._accumulate(_unbroadcast(g * self.data, other.shape))

        return self._result(self.data * other.data, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)

        def backward(g):
            od = other.data.astype(np.float64)
            self._accumulate(_unbroadcast(g / od, self.shape))
            other._accumulate(_unbroadcast(-g * self.data / od**2, other.shape))

        return self._result(self.data / other.data, (self, other), backward, "div")

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")

        def backward(g):
            self._accumulate(g * exponent * self.data.astype(np.float64) ** (exponent - 1))

        return self._result(self.data**exponent, (self,), backward, "pow")

    def __matmul__(self, other):
        other = self._lift(other)
        if self.ndim != 2 or other.ndim != 2:
            raise ValueError(f"matmul needs 2-D operands, got {self.shape} @ {other.shape}")
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"matmul shape mismatch: {self.shape} @ {other.shape}")
        a64 = self.data.astype(np.float64)
        b64 = other.data.astype(np.float64)

        def backward(g):
            self._accumulate(g @ b64.T)
            other._accumulate(a64.T @ g)

        return self._result(_store(a64 @ b64, self.data.dtype), (self, other), backward, "matmul")

    # -- shape ops ---------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.shape

        def backward(g):
            self._accumulate(g.reshape(old))

        return self._result(self.data.reshape(shape), (self,), backward, "reshape")

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = np.argsort(axes)

        def backward(g):
            self._accumulate(g.transpose(inverse))

        return self._result(self.data.transpose(axes), (self,), backward, "transpose")

    def __getitem__(self, key):
        def backward(g):
            full = np.zeros(self.shape, dtype=np.float64)
            np.add.at(full, key, g)
            self._accumulate(full)

        return self._result(self.data[key], (self,), backward, "getitem")

    @staticmethod
    def concat(tensors: list["Tensor"], axis: int = 0) -> "Tensor":
        tensors = [Tensor._lift(t) for t in tensors]
        sizes = [t.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]

        def backward(g):
            for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
                t._accumulate(piece)

        data = np.concatenate([t.data for t in tensors], axis=axis)
        return Tensor._result(data, tuple(tensors), backward, "concat")

    # -- reductions (64-bit accumulation) -----------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        def backward(g):
            if axis is None:
                grad = np.broadcast_to(g.reshape((1,) * self.ndim), self.shape)
            else:
                if not keepdims:
                    g = np.expand_dims(g, axis)
                grad = np.broadcast_to(g, self.shape)
            self._accumulate(grad.astype(np.float64))

        data = self.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64)
        return self._result(data, (self,), backward, "sum")

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.size
        elif isinstance(axis, tuple):
            count = int(np.prod([self.shape[a] for a in axis]))
        else:
            count = self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- pointwise nonlinearities -------------------------------------------

    def exp(self):
        out_data = np.exp(self.data.astype(np.float64))

        def backward(g):
            self._accumulate(g * out_data)

        return self._result(_store(out_data, self.data.dtype), (self,), backward, "exp")

    def log(self):
        def backward(g):
            self._accumulate(g / self.data.astype(np.float64))

        return self._result(np.log(self.data), (self,), backward, "log")

    def tanh(self):
        out_data = np.tanh(self.data.astype(np.float64))

        def backward(g):
            self._accumulate(g * (1.0 - out_data**2))

        return self._result(_store(out_data, self.data.dtype), (self,), backward, "tanh")

    def sigmoid(self):
        x = self.data.astype(np.float64)
        out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))

        def backward(g):
            self._accumulate(g * out_data * (1.0 - out_data))

        return self._result(_store(out_data, self.data.dtype), (self,), backward, "sigmoid")


class Parameter(Tensor):
    """A trainable tensor (requires_grad always on)."""

    __slots__ = ()

    def __init__(self, data):
        super().__init__(data, requires_grad=True)
