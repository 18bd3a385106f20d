"""
Dense tensors with reverse-mode differentiation recorded on an explicit tape.

Tensors are immutable once created; the only state written after construction is
``grad``, filled during ``Tape.backward``. Ops executed while a ``Tape`` is active
and touching a ``requires_grad`` tensor are recorded on that tape.
"""

import logging
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory

logger = logging.getLogger(__name__)

VectorJacobian = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_DEFAULT_DTYPE: ContextVar[np.dtype] = ContextVar(
    "default_dtype", default=np.dtype(np.float32)
)
_ACTIVE_TAPE: ContextVar["Tape | None"] = ContextVar("active_tape", default=None)
_NAME_SCOPE: ContextVar[tuple[str, ...]] = ContextVar("name_scope", default=())


def default_dtype() -> np.dtype:
    return _DEFAULT_DTYPE.get()


@contextmanager
def shadow_precision() -> Iterator[None]:
    """
    Create new tensors in 64-bit precision for the duration of the block.

    Only gradient checks use this; training and inference run in 32-bit.
    """
    token = _DEFAULT_DTYPE.set(np.dtype(np.float64))
    try:
        yield
    finally:
        _DEFAULT_DTYPE.reset(token)


@contextmanager
def name_scope(name: str) -> Iterator[None]:
    """
    Prefix op names inside the block, so numerical diagnostics name the failing block.
    """
    token = _NAME_SCOPE.set(_NAME_SCOPE.get() + (name,))
    try:
        yield
    finally:
        _NAME_SCOPE.reset(token)


def scoped_name(op: str) -> str:
    return "/".join(_NAME_SCOPE.get() + (op,))


@dataclass(frozen=True)
class Node:
    op: str
    output: "Tensor"
    inputs: tuple["Tensor", ...]
    vjp: VectorJacobian


class Tensor:
    """
    A dense float array with optional participation in gradient recording.

    Attributes:
        data (np.ndarray): The values, row-major, float32 (float64 in shadow precision).
        requires_grad (bool): Whether backward passes should produce a gradient for it.
        grad (np.ndarray | None): Accumulated gradient, same shape as data.
        name (str | None): Optional label used in diagnostics.
    """

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
    ) -> None:
        self.data = np.array(data, dtype=default_dtype())
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._node: Node | None = None
        self._tape: "Tape | None" = None

    @classmethod
    def _from_op(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        out._node = None
        out._tape = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor._from_op(self.data, requires_grad=False)

    def reshape(self, *shape: int) -> "Tensor":
        from app.autograd import ops

        return ops.reshape(self, shape)

    def transpose(self, axes: Sequence[int]) -> "Tensor":
        from app.autograd import ops

        return ops.transpose(self, axes)

    def sum(self) -> "Tensor":
        from app.autograd import ops

        return ops.sum(self)

    def mean(self) -> "Tensor":
        from app.autograd import ops

        return ops.mean(self)

    def backward(self) -> None:
        backward(self)

    def __add__(self, other: Any) -> "Tensor":
        from app.autograd import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from app.autograd import ops

        return ops.add(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from app.autograd import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from app.autograd import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from app.autograd import ops

        return ops.div(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from app.autograd import ops

        return ops.matmul(self, other)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Tape:
    """
    Ordered record of differentiable ops executed while the tape is active.

    A tape can be replayed once. Use it as a context manager around the forward pass:

        with Tape() as tape:
            loss = cross_entropy(model_forward(...), labels)
        tape.backward(loss)
    """

    def __init__(self) -> None:
        self._nodes: list[Node] = []
        self._leaves: dict[int, Tensor] = {}
        self._consumed = False
        self._tokens: list = []

    def __enter__(self) -> "Tape":
        if self._consumed:
            raise ApplicationError(
                detail="Tape was already replayed; start a new tape for a new forward pass",
                category=ErrorCategory.USAGE,
            )
        self._tokens.append(_ACTIVE_TAPE.set(self))
        return self

    def __exit__(self, *exc_info: object) -> None:
        _ACTIVE_TAPE.reset(self._tokens.pop())

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def record(self, node: Node) -> None:
        if self._consumed:
            raise ApplicationError(
                detail=f"Cannot record {node.op} on a tape that was already replayed",
                category=ErrorCategory.USAGE,
            )
        self._nodes.append(node)
        for tensor in node.inputs:
            if tensor.requires_grad and tensor.is_leaf:
                self._leaves[id(tensor)] = tensor

    def backward(self, loss: Tensor) -> None:
        """
        Replay the tape in reverse, accumulating gradients into every leaf.

        Args:
            loss (Tensor): A single-element tensor produced on this tape.

        Raises:
            ApplicationError: If the tape was already replayed, the loss is not a
                scalar, or the loss was not produced on this tape.
        """
        if self._consumed:
            raise ApplicationError(
                detail="Tape was already replayed; run a new forward pass before calling backward again",
                category=ErrorCategory.USAGE,
            )
        if loss.size != 1:
            raise ApplicationError(
                detail=f"backward requires a scalar loss, got shape {loss.shape}",
                category=ErrorCategory.USAGE,
            )
        if loss._tape is not self:
            raise ApplicationError(
                detail="Loss was not produced on this tape",
                category=ErrorCategory.USAGE,
            )

        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self._nodes):
            upstream = pending.pop(id(node.output), None)
            if upstream is None:
                continue
            for parent, grad in zip(node.inputs, node.vjp(upstream)):
                if grad is None or not parent.requires_grad:
                    continue
                grad = np.asarray(grad, dtype=parent.dtype).reshape(parent.shape)
                if parent.is_leaf:
                    parent.grad = grad.copy() if parent.grad is None else parent.grad + grad
                else:
                    key = id(parent)
                    pending[key] = grad if key not in pending else pending[key] + grad

        for leaf in self._leaves.values():
            if leaf.grad is None:
                leaf.grad = np.zeros_like(leaf.data)

        logger.debug(f"Replayed tape with {len(self._nodes)} ops")
        self._consumed = True
        self._nodes.clear()


def backward(loss: Tensor) -> None:
    """
    Run the backward pass of the tape that produced ``loss``.
    """
    if loss._tape is None:
        raise ApplicationError(
            detail="Loss was not produced on an open tape",
            category=ErrorCategory.USAGE,
        )
    loss._tape.backward(loss)


def apply_op(
    op: str,
    data: np.ndarray,
    inputs: Sequence[Tensor],
    vjp: VectorJacobian,
) -> Tensor:
    """
    Wrap an op result, check it is finite and record it on the active tape if needed.
    """
    if not np.all(np.isfinite(data)):
        name = scoped_name(op)
        logger.error(f"Non-finite values produced by {name}")
        raise ApplicationError(
            detail=f"Non-finite values produced by {name}",
            category=ErrorCategory.NUMERICAL,
        )
    tape = _ACTIVE_TAPE.get()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._from_op(data, requires_grad=track)
    if track:
        node = Node(op=scoped_name(op), output=out, inputs=tuple(inputs), vjp=vjp)
        out._node = node
        out._tape = tape
        tape.record(node)  # type: ignore[union-attr]
    return out
