"""Reverse-mode automatic differentiation over dense float64 arrays.

Operations executed inside ``grad_tape()`` are recorded when at least one input
requires a gradient; ``backward`` walks the tape in reverse and returns the
gradient of a scalar loss for every leaf parameter it reaches. Outside a tape the
same functions are plain numpy forward evaluation and are safe to call from many
threads on shared parameters.
"""

import logging
import threading
from collections.abc import Callable, Sequence
from contextlib import contextmanager

import numpy as np

from utils.exceptions import ConfigurationError, NonFiniteError, UsageError

logger = logging.getLogger(__name__)

Vjp = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]

_local = threading.local()

LN2 = float(np.log(2.0))


class Tape:
    """Ordered record of taped operations (already in topological order)."""

    def __init__(self) -> None:
        self._entries: list[tuple["Tensor", tuple["Tensor", ...], Vjp]] = []

    def record(self, output: "Tensor", inputs: tuple["Tensor", ...], vjp: Vjp) -> int:
        self._entries.append((output, inputs, vjp))
        return len(self._entries) - 1

    @property
    def entries(self) -> list[tuple["Tensor", tuple["Tensor", ...], Vjp]]:
        return self._entries

    def clear(self) -> None:
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


def active_tape() -> Tape | None:
    return getattr(_local, "tape", None)


@contextmanager
def grad_tape():
    """Records every differentiable operation of the current thread until exit."""
    previous = active_tape()
    tape = Tape()
    _local.tape = tape
    try:
        yield tape
    finally:
        _local.tape = previous


class Tensor:
    __slots__ = ("values", "requires_grad", "node_id", "_tape")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.node_id: int | None = None
        self._tape: Tape | None = None

    @classmethod
    def parameter(cls, values) -> "Tensor":
        return cls(np.array(values, dtype=np.float64), requires_grad=True)

    @property
    def shape(self) -> list[int]:
        return list(self.values.shape)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def item(self) -> float:
        return float(self.values.reshape(-1)[0]) if self.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.values

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, node_id={self.node_id})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(values: np.ndarray, inputs: tuple[Tensor, ...], vjp: Vjp, name: str) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{name} produced non-finite values")
    out = Tensor(values)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._tape = tape
        out.node_id = tape.record(out, inputs, vjp)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.values.shape, b.values.shape
    return _make(a.values + b.values, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.values.shape, b.values.shape
    return _make(a.values - b.values, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.values, b.values
    return _make(
        av * bv,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
        "mul",
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.values, b.values
    with np.errstate(divide="ignore", invalid="ignore"):
        out = av / bv
    return _make(
        out,
        (a, b),
        lambda g: (_unbroadcast(g / bv, av.shape), _unbroadcast(-g * av / (bv * bv), bv.shape)),
        "div",
    )


def matmul(a, b) -> Tensor:
    """(..., n) @ (n, m) -> (..., m); the right operand is a weight matrix."""
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.values, b.values
    if bv.ndim != 2 or av.ndim < 1 or av.shape[-1] != bv.shape[0]:
        raise ConfigurationError(f"matmul shape mismatch: {list(av.shape)} @ {list(bv.shape)}")
    n, m = bv.shape

    def vjp(g):
        return g @ bv.T, av.reshape(-1, n).T @ g.reshape(-1, m)

    return _make(av @ bv, (a, b), vjp, "matmul")


def relu(a) -> Tensor:
    a = as_tensor(a)
    av = a.values
    return _make(np.maximum(av, 0.0), (a,), lambda g: (g * (av > 0),), "relu")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    av = a.values
    z = np.exp(-np.abs(av))
    s = np.where(av >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return _make(s, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def log(a) -> Tensor:
    a = as_tensor(a)
    av = a.values
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(av)
    return _make(out, (a,), lambda g: (g / av,), "log")


def log2(a) -> Tensor:
    return mul(log(a), 1.0 / LN2)


def sum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    shape = a.values.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return _make(a.values.sum(axis=axis, keepdims=keepdims), (a,), vjp, "sum")


def mean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.values.size if axis is None else a.values.shape[axis]
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def max(a, axis: int, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    av = a.values
    top = av.max(axis=axis, keepdims=True)
    winners = (av == top).astype(np.float64)
    winners /= winners.sum(axis=axis, keepdims=True)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * winners,)

    return _make(top if keepdims else np.squeeze(top, axis=axis), (a,), vjp, "max")


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    sizes = [t.values.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return _make(
        np.concatenate([t.values for t in tensors], axis=axis),
        tensors,
        lambda g: tuple(np.split(g, splits, axis=axis)),
        "concat",
    )


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    original = a.values.shape
    return _make(a.values.reshape(shape), (a,), lambda g: (g.reshape(original),), "reshape")


def broadcast_to(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    original = a.values.shape
    return _make(np.broadcast_to(a.values, shape), (a,), lambda g: (_unbroadcast(g, original),), "broadcast_to")


def take(a, index) -> Tensor:
    """Basic/advanced indexing; the gradient scatters back with np.add.at."""
    a = as_tensor(a)
    shape = a.values.shape

    def vjp(g):
        out = np.zeros(shape)
        np.add.at(out, index, g)
        return (out,)

    return _make(np.array(a.values[index]), (a,), vjp, "take")


def backward(loss: Tensor) -> dict[Tensor, np.ndarray]:
    """
    Reverse sweep from a scalar loss.

    Returns:
        d loss / d p for every leaf tensor with requires_grad reached from the loss

    Raises:
        UsageError: the loss is not a scalar or was not produced on a tape
    """
    if loss.size != 1:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = loss._tape
    if tape is None:
        raise UsageError("loss was not produced by taped operations")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    leaves: dict[int, Tensor] = {}
    for output, inputs, vjp in reversed(tape.entries):
        g = grads.pop(id(output), None)
        if g is None:
            continue
        for tensor, grad in zip(inputs, vjp(g)):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            grads[key] = grad if key not in grads else grads[key] + grad
            if tensor.node_id is None:
                leaves[key] = tensor
    logger.debug("backward over %d tape entries, %d leaves", len(tape), len(leaves))
    tape.clear()
    return {tensor: np.array(grads[key], dtype=np.float64) for key, tensor in leaves.items()}
