"""
Differentiable ops over ``Tensor``.

Every op computes its result with numpy, then hands the result and a
vector-Jacobian closure to ``apply_op``. Python scalars and numpy arrays are
accepted wherever a tensor operand is expected and treated as constants.
"""

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from app.autograd.tensor import Tensor, apply_op, as_tensor
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory


def _dimension_error(detail: str) -> ApplicationError:
    return ApplicationError(detail=detail, category=ErrorCategory.DIMENSION)


def _normalize_axis(op: str, ndim: int, axis: int) -> int:
    if not -ndim <= axis < ndim:
        raise _dimension_error(f"{op}: axis {axis} out of range for rank {ndim}")
    return axis % ndim


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_operands(op: str, a: Any, b: Any) -> tuple[Tensor, Tensor]:
    a, b = as_tensor(a), as_tensor(b)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise _dimension_error(
            f"{op}: shapes {a.shape} and {b.shape} are not broadcastable"
        )
    return a, b


def add(a: Any, b: Any) -> Tensor:
    a, b = _broadcast_operands("add", a, b)

    def vjp(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return apply_op("add", a.data + b.data, (a, b), vjp)


def mul(a: Any, b: Any) -> Tensor:
    a, b = _broadcast_operands("mul", a, b)

    def vjp(g: np.ndarray):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return apply_op("mul", a.data * b.data, (a, b), vjp)


def div(a: Any, b: Any) -> Tensor:
    a, b = _broadcast_operands("div", a, b)
    out = a.data / b.data

    def vjp(g: np.ndarray):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        )

    return apply_op("div", out, (a, b), vjp)


def exp(x: Any) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return apply_op("exp", out, (x,), lambda g: (g * out,))


def sum(x: Any, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)

    def vjp(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return apply_op("sum", np.sum(x.data, axis=axis, keepdims=keepdims), (x,), vjp)


def mean(x: Any, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[axis]

    def vjp(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return apply_op("mean", np.mean(x.data, axis=axis, keepdims=keepdims), (x,), vjp)


def reshape(x: Any, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    shape = tuple(shape)
    if math.prod(shape) != x.size:
        raise _dimension_error(f"reshape: cannot view {x.shape} as {shape}")
    return apply_op(
        "reshape", x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),)
    )


def transpose(x: Any, axes: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise _dimension_error(f"transpose: {axes} is not a permutation of rank {x.ndim}")
    inverse = tuple(np.argsort(axes))
    return apply_op(
        "transpose",
        np.ascontiguousarray(np.transpose(x.data, axes)),
        (x,),
        lambda g: (np.transpose(g, inverse),),
    )


def matmul(a: Any, b: Any) -> Tensor:
    """
    Batched matrix product over the last two axes; batch extents must agree.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise _dimension_error(f"matmul: operands need rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise _dimension_error(
            f"matmul: inner extents differ ({a.shape[-1]} vs {b.shape[-2]})"
        )
    if a.shape[:-2] != b.shape[:-2]:
        raise _dimension_error(
            f"matmul: batch extents differ ({a.shape[:-2]} vs {b.shape[:-2]})"
        )

    def vjp(g: np.ndarray):
        return g @ np.swapaxes(b.data, -1, -2), np.swapaxes(a.data, -1, -2) @ g

    return apply_op("matmul", a.data @ b.data, (a, b), vjp)


def linear(x: Any, weight: Any, bias: Any | None = None) -> Tensor:
    out = matmul(x, transpose(weight, (1, 0)))
    return out if bias is None else add(out, bias)


def softmax(x: Any, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    axis = _normalize_axis("softmax", x.ndim, axis)
    shifted = np.exp(x.data - np.max(x.data, axis=axis, keepdims=True))
    out = shifted / np.sum(shifted, axis=axis, keepdims=True)

    def vjp(g: np.ndarray):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return apply_op("softmax", out, (x,), vjp)


def elu(x: Any) -> Tensor:
    x = as_tensor(x)
    negative = np.minimum(x.data, 0)
    out = np.where(x.data > 0, x.data, np.expm1(negative))

    def vjp(g: np.ndarray):
        return (g * np.where(x.data > 0, 1, np.exp(negative)),)

    return apply_op("elu", out, (x,), vjp)


def layer_norm(
    x: Any,
    normalized_axis: int,
    gain: Any,
    shift: Any,
    eps: float = 1e-5,
) -> Tensor:
    """
    Normalize each slice along ``normalized_axis`` to zero mean and unit variance,
    then apply the per-position affine ``gain``/``shift``.
    """
    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)
    axis = _normalize_axis("layer_norm", x.ndim, normalized_axis)
    extent = x.shape[axis]
    if extent == 0:
        raise _dimension_error("layer_norm: normalized axis has zero length")
    if gain.shape != (extent,) or shift.shape != (extent,):
        raise _dimension_error(
            f"layer_norm: affine shapes {gain.shape}/{shift.shape} do not match axis extent {extent}"
        )
    affine_shape = [1] * x.ndim
    affine_shape[axis] = extent
    gain_b = gain.data.reshape(affine_shape)

    centered = x.data - np.mean(x.data, axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt(np.mean(centered**2, axis=axis, keepdims=True) + eps)
    normalized = centered * inv_std
    out = normalized * gain_b + shift.data.reshape(affine_shape)
    other_axes = tuple(i for i in range(x.ndim) if i != axis)

    def vjp(g: np.ndarray):
        d_norm = g * gain_b
        dx = inv_std * (
            d_norm
            - np.mean(d_norm, axis=axis, keepdims=True)
            - normalized * np.mean(d_norm * normalized, axis=axis, keepdims=True)
        )
        return (
            dx,
            np.sum(g * normalized, axis=other_axes),
            np.sum(g, axis=other_axes),
        )

    return apply_op("layer_norm", out, (x, gain, shift), vjp)


@dataclass
class RunningStats:
    """
    Batch-norm running statistics, updated by exponential moving average in train mode.
    """

    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def initial(cls, channels: int, dtype: np.dtype) -> "RunningStats":
        return cls(mean=np.zeros(channels, dtype=dtype), var=np.ones(channels, dtype=dtype))

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray, momentum: float) -> None:
        self.mean = ((1 - momentum) * self.mean + momentum * batch_mean).astype(self.mean.dtype)
        self.var = ((1 - momentum) * self.var + momentum * batch_var).astype(self.var.dtype)

    def copy(self) -> "RunningStats":
        return RunningStats(mean=self.mean.copy(), var=self.var.copy())


def batch_norm(
    x: Any,
    gain: Any,
    shift: Any,
    running_stats: RunningStats,
    training: bool,
    eps: float = 1e-5,
    momentum: float = 0.1,
) -> Tensor:
    """
    Per-channel normalization of a [B, C, H, W] tensor.

    Train mode normalizes with batch statistics (biased variance) and folds the batch
    mean and unbiased variance into ``running_stats``; eval mode uses the running values.
    """
    x, gain, shift = as_tensor(x), as_tensor(gain), as_tensor(shift)
    if x.ndim != 4:
        raise _dimension_error(f"batch_norm: expected [B, C, H, W], got {x.shape}")
    channels = x.shape[1]
    if gain.shape != (channels,) or shift.shape != (channels,):
        raise _dimension_error(
            f"batch_norm: affine shapes {gain.shape}/{shift.shape} do not match {channels} channels"
        )
    axes = (0, 2, 3)
    count = x.shape[0] * x.shape[2] * x.shape[3]
    gain_b = gain.data.reshape(1, channels, 1, 1)

    if training:
        if count < 2:
            raise ApplicationError(
                detail=f"batch_norm: train mode needs at least 2 values per channel, got {count}",
                category=ErrorCategory.CONFIG,
            )
        batch_mean = np.mean(x.data, axis=axes)
        centered = x.data - batch_mean.reshape(1, channels, 1, 1)
        batch_var = np.mean(centered**2, axis=axes)
        running_stats.update(batch_mean, batch_var * count / (count - 1), momentum)
    else:
        centered = x.data - running_stats.mean.reshape(1, channels, 1, 1)
        batch_var = running_stats.var
    inv_std = (1.0 / np.sqrt(batch_var + eps)).reshape(1, channels, 1, 1)
    normalized = centered * inv_std
    out = normalized * gain_b + shift.data.reshape(1, channels, 1, 1)

    def vjp(g: np.ndarray):
        d_norm = g * gain_b
        if training:
            dx = inv_std * (
                d_norm
                - np.mean(d_norm, axis=axes, keepdims=True)
                - normalized * np.mean(d_norm * normalized, axis=axes, keepdims=True)
            )
        else:
            dx = d_norm * inv_std
        return dx, np.sum(g * normalized, axis=axes), np.sum(g, axis=axes)

    return apply_op("batch_norm", out, (x, gain, shift), vjp)


def _pool_matrix(n_in: int, n_out: int, dtype: np.dtype) -> np.ndarray:
    matrix = np.zeros((n_out, n_in), dtype=dtype)
    for i in range(n_out):
        start = (i * n_in) // n_out
        end = -(-((i + 1) * n_in) // n_out)
        matrix[i, start:end] = 1.0 / (end - start)
    return matrix


def adaptive_avg_pool2d(x: Any, out: tuple[int, int]) -> Tensor:
    """
    Average [B, C, H, W] into out[0] x out[1] bins, bin i spanning
    floor(i*H/outH) .. ceil((i+1)*H/outH).
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise _dimension_error(f"adaptive_avg_pool2d: expected [B, C, H, W], got {x.shape}")
    out_h, out_w = out
    for axis, (extent, target) in enumerate(zip(x.shape[2:], out), start=2):
        if not 1 <= target <= extent:
            raise _dimension_error(
                f"adaptive_avg_pool2d: output extent {target} invalid for input extent {extent} on axis {axis}"
            )
    rows = _pool_matrix(x.shape[2], out_h, x.dtype)
    cols = _pool_matrix(x.shape[3], out_w, x.dtype)

    def vjp(g: np.ndarray):
        return (rows.T @ g @ cols,)

    return apply_op("adaptive_avg_pool2d", rows @ x.data @ cols.T, (x,), vjp)


def _slice(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    selector = tuple(index)

    def vjp(g: np.ndarray):
        full = np.zeros_like(x.data)
        full[selector] = g
        return (full,)

    return apply_op("split", x.data[selector].copy(), (x,), vjp)


def split(x: Any, axis: int, parts: int) -> list[Tensor]:
    x = as_tensor(x)
    axis = _normalize_axis("split", x.ndim, axis)
    extent = x.shape[axis]
    if parts < 1 or extent % parts:
        raise _dimension_error(
            f"split: extent {extent} of axis {axis} is not divisible into {parts} parts"
        )
    step = extent // parts
    return [_slice(x, axis, i * step, (i + 1) * step) for i in range(parts)]


def concat(tensors: Sequence[Any], axis: int) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise _dimension_error("concat: nothing to concatenate")
    first = tensors[0]
    axis = _normalize_axis("concat", first.ndim, axis)
    for t in tensors[1:]:
        if t.ndim != first.ndim or any(
            t.shape[i] != first.shape[i] for i in range(first.ndim) if i != axis
        ):
            raise _dimension_error(
                f"concat: shape {t.shape} does not match {first.shape} outside axis {axis}"
            )
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return apply_op(
        "concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, vjp
    )


def conv2d(
    x: Any,
    weight: Any,
    bias: Any | None = None,
    stride: tuple[int, int] = (1, 1),
    padding: tuple[int, int, int, int] = (0, 0, 0, 0),
    dilation: tuple[int, int] = (1, 1),
    groups: int = 1,
) -> Tensor:
    """
    Grouped, dilated 2-D cross-correlation of [B, Cin, H, W] with [Cout, Cin/groups, kh, kw].

    ``padding`` is explicit per side: (top, bottom, left, right). The result is
    accumulated tap by tap over the kernel window.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4:
        raise _dimension_error(f"conv2d: input must be [B, Cin, H, W], got {x.shape}")
    if weight.ndim != 4:
        raise _dimension_error(f"conv2d: weight must be [Cout, Cin/groups, kh, kw], got {weight.shape}")
    batch, in_channels, height, width = x.shape
    out_channels, group_channels, kh, kw = weight.shape
    if groups < 1 or in_channels % groups or out_channels % groups:
        raise ApplicationError(
            detail=f"conv2d: groups={groups} must divide input ({in_channels}) and output ({out_channels}) channels",
            category=ErrorCategory.CONFIG,
        )
    if group_channels != in_channels // groups:
        raise _dimension_error(
            f"conv2d: weight axis 1 has {group_channels} channels, expected {in_channels // groups}"
        )
    if min(dilation) < 1 or min(stride) < 1:
        raise ApplicationError(
            detail=f"conv2d: stride {stride} and dilation {dilation} must be >= 1",
            category=ErrorCategory.CONFIG,
        )
    bias_t = None if bias is None else as_tensor(bias)
    if bias_t is not None and bias_t.shape != (out_channels,):
        raise _dimension_error(f"conv2d: bias shape {bias_t.shape} != ({out_channels},)")

    top, bottom, left, right = padding
    (sh, sw), (dh, dw) = stride, dilation
    padded_h, padded_w = height + top + bottom, width + left + right
    for axis, (extent, k, d) in ((2, (padded_h, kh, dh)), (3, (padded_w, kw, dw))):
        if d * (k - 1) + 1 > extent:
            raise _dimension_error(
                f"conv2d: kernel extent {k} with dilation {d} exceeds padded input {extent} on axis {axis}"
            )
    out_h = (padded_h - dh * (kh - 1) - 1) // sh + 1
    out_w = (padded_w - dw * (kw - 1) - 1) // sw + 1

    group_out = out_channels // groups
    padded = np.pad(x.data, ((0, 0), (0, 0), (top, bottom), (left, right)))
    grouped = padded.reshape(batch, groups, group_channels, padded_h, padded_w)
    kernel = weight.data.reshape(groups, group_out, group_channels, kh, kw)

    def window(i: int, j: int) -> tuple[slice, ...]:
        return (
            slice(None),
            slice(None),
            slice(None),
            slice(i * dh, i * dh + sh * (out_h - 1) + 1, sh),
            slice(j * dw, j * dw + sw * (out_w - 1) + 1, sw),
        )

    out = np.zeros((batch, groups, group_out, out_h, out_w), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            out += np.einsum("bgchw,goc->bgohw", grouped[window(i, j)], kernel[..., i, j])
    out = out.reshape(batch, out_channels, out_h, out_w)
    if bias_t is not None:
        out = out + bias_t.data.reshape(1, out_channels, 1, 1)

    def vjp(g: np.ndarray):
        g_grouped = g.reshape(batch, groups, group_out, out_h, out_w)
        d_padded = np.zeros_like(grouped)
        d_kernel = np.zeros_like(kernel)
        for i in range(kh):
            for j in range(kw):
                taps = window(i, j)
                d_kernel[..., i, j] = np.einsum("bgohw,bgchw->goc", g_grouped, grouped[taps])
                d_padded[taps] += np.einsum("bgohw,goc->bgchw", g_grouped, kernel[..., i, j])
        dx = d_padded.reshape(batch, in_channels, padded_h, padded_w)[
            :, :, top : top + height, left : left + width
        ]
        grads = [dx, d_kernel.reshape(weight.shape)]
        if bias_t is not None:
            grads.append(np.sum(g, axis=(0, 2, 3)))
        return grads

    inputs = (x, weight) if bias_t is None else (x, weight, bias_t)
    return apply_op("conv2d", out, inputs, vjp)


def same_padding(kernel: int, dilation: int = 1) -> tuple[int, int]:
    """
    Left/right pads preserving length; even kernels pad one more on the right.
    """
    total = dilation * (kernel - 1)
    return total // 2, total - total // 2


def cross_entropy(logits: Any, labels: Any) -> Tensor:
    """
    Mean negative log-likelihood of integer ``labels`` under softmax(``logits``).
    """
    logits = as_tensor(logits)
    targets = np.asarray(labels.data if isinstance(labels, Tensor) else labels)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise _dimension_error(
            f"cross_entropy: logits {logits.shape} and labels {targets.shape} do not align"
        )
    classes = logits.shape[1]
    if targets.size and (
        np.any(targets != np.round(targets)) or targets.min() < 0 or targets.max() >= classes
    ):
        raise ApplicationError(
            detail=f"cross_entropy: labels must be integers in [0, {classes})",
            category=ErrorCategory.DATA,
        )
    targets = targets.astype(np.int64)
    batch = logits.shape[0]
    rows = np.arange(batch)
    peak = np.max(logits.data, axis=1, keepdims=True)
    shifted = np.exp(logits.data - peak)
    total = np.sum(shifted, axis=1, keepdims=True)
    log_norm = (peak + np.log(total))[:, 0]
    loss = np.mean(log_norm - logits.data[rows, targets])

    def vjp(g: np.ndarray):
        probs = shifted / total
        probs[rows, targets] -= 1
        return (g * probs / batch,)

    return apply_op("cross_entropy", np.asarray(loss, dtype=logits.dtype), (logits,), vjp)
