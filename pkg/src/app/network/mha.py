"""
Multiscale hybrid attention: channel attention with temporal reweighting of the
values, followed by global attention over the channel-time plane.
"""

import logging

from app.autograd import Tensor, name_scope
from app.autograd.ops import (
    add,
    adaptive_avg_pool2d,
    concat,
    conv2d,
    div,
    elu,
    exp,
    layer_norm,
    matmul,
    mul,
    reshape,
    same_padding,
    softmax,
    split,
    transpose,
)
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.network.params import MGA_KERNELS, MHAParams, MGAParams, MTABranch, MTAParams
from app.schemas.config import AblationFlags, dilation_for_window
from app.services.enums.block import Block

logger = logging.getLogger(__name__)


def _config_error(detail: str) -> ApplicationError:
    logger.error(detail)
    return ApplicationError(detail=detail, category=ErrorCategory.CONFIG)


def _ensure_feature_map(x: Tensor, channels: int, block: str) -> None:
    if x.ndim != 4 or x.shape[1] != channels or x.shape[2] != 1:
        detail = f"{block}: expected input [B, {channels}, 1, T], got {x.shape}"
        logger.error(detail)
        raise ApplicationError(detail=detail, category=ErrorCategory.DIMENSION)


def project_qkv(e: Tensor, params: MHAParams) -> list[Tensor]:
    """
    Expand E to 3C channels with a pointwise conv, mix neighbouring samples with a
    depthwise (1, 3) conv and split into query, key and value, each [B, C, 1, T].
    """
    expanded = conv2d(e, params.ca_conv_in)
    mixed = conv2d(
        expanded,
        params.ca_dwconv,
        padding=(0, 0, 1, 1),
        groups=expanded.shape[1],
    )
    return split(mixed, axis=1, parts=3)


def attention_map(q: Tensor, k: Tensor, log_t: Tensor) -> Tensor:
    """
    Row-stochastic channel affinity softmax(Q Kᵀ / t), t = exp(log_t).

    Returns:
        Tensor: [B, C, C], each row summing to 1.
    """
    batch, channels, _, samples = q.shape
    q_flat = reshape(q, (batch, channels, samples))
    k_flat = reshape(k, (batch, channels, samples))
    logits = div(matmul(q_flat, transpose(k_flat, (0, 2, 1))), exp(log_t))
    return softmax(logits, axis=-1)


def mta_branch_weight(x: Tensor, branch: MTABranch) -> Tensor:
    """
    Per-example weight of one temporal branch: conv, layer norm over time, ELU and a
    global average, shaped [B, 1, 1, 1].
    """
    left, right = same_padding(branch.kernel_size)
    features = conv2d(x, branch.weight, branch.bias, padding=(0, 0, left, right))
    features = layer_norm(features, 3, branch.ln_gain, branch.ln_shift)
    return adaptive_avg_pool2d(elu(features), (1, 1))


def mta_forward(v: Tensor, params: MTAParams) -> Tensor:
    """
    Reweight the value tensor along time with three parallel kernels.

    Args:
        v (Tensor): Values [B, C, 1, T].
        params (MTAParams): Block parameters.

    Returns:
        Tensor: V' with the shape of ``v``.

    Raises:
        ApplicationError: CONFIG when T is shorter than the widest temporal kernel.
    """
    channels = params.spatial_conv.shape[1]
    _ensure_feature_map(v, channels, "mta")
    widest = max(branch.kernel_size for branch in params.branches)
    if v.shape[3] < widest:
        raise _config_error(
            f"mta: a window of {v.shape[3]} samples is shorter than the {widest}-sample "
            "temporal kernel; use a longer decision window"
        )

    with name_scope("mta"):
        squeezed = conv2d(v, params.spatial_conv)
        parts = split(conv2d(squeezed, params.up_conv), axis=1, parts=len(params.branches))
        fused = None
        for part, branch in zip(parts, params.branches):
            term = mul(mta_branch_weight(part, branch), part)
            fused = term if fused is None else add(fused, term)
        return conv2d(fused, params.recover_conv)


def channel_attention_forward(e: Tensor, params: MHAParams, ablation: AblationFlags) -> Tensor:
    """
    Channel attention over CSP components, values refined by MTA.

    With CA ablated the block reduces to MTA(E), or to E when MTA is ablated too.
    With MTA ablated the values enter the attention unchanged.
    """
    channels = params.ca_conv_out.shape[0]
    _ensure_feature_map(e, channels, "channel_attention")
    use_mta = ablation.is_enabled(Block.MTA)
    if not ablation.is_enabled(Block.CA):
        return mta_forward(e, params.mta) if use_mta else e

    with name_scope("channel_attention"):
        q, k, v = project_qkv(e, params)
        v_prime = mta_forward(v, params.mta) if use_mta else v
        attention = attention_map(q, k, params.log_t)
        batch, _, _, samples = e.shape
        mixed = matmul(attention, reshape(v_prime, (batch, channels, samples)))
        return conv2d(reshape(mixed, (batch, channels, 1, samples)), params.ca_conv_out)


def mga_forward(h: Tensor, params: MGAParams, window_len_samples: int) -> Tensor:
    """
    Global attention over the [C, T] plane with dilated square kernels and a residual path.

    Args:
        h (Tensor): Channel-attention output [B, C, 1, T].
        params (MGAParams): Block parameters.
        window_len_samples (int): Decision-window length, fixing the dilation unless
            ``params.dilation`` overrides it.

    Returns:
        Tensor: F, [B, 1, C, T].
    """
    if h.ndim != 4 or h.shape[2] != 1:
        detail = f"mga: expected input [B, C, 1, T], got {h.shape}"
        logger.error(detail)
        raise ApplicationError(detail=detail, category=ErrorCategory.DIMENSION)
    batch, channels, _, samples = h.shape
    widest = max(MGA_KERNELS)
    if channels < widest or samples < widest:
        raise _config_error(
            f"mga: a [{channels}, {samples}] channel-time plane is smaller than the "
            f"{widest}x{widest} kernel; use more CSP components or a longer window"
        )
    dilation = params.dilation or dilation_for_window(window_len_samples)

    with name_scope("mga"):
        plane = reshape(h, (batch, 1, channels, samples))
        expanded = conv2d(plane, params.up_conv)
        gated = []
        for part, kernel in zip(split(expanded, axis=1, parts=3), params.dilated_convs):
            top, bottom = same_padding(kernel.shape[-1], dilation)
            attention = conv2d(
                part,
                kernel,
                padding=(top, bottom, top, bottom),
                dilation=(dilation, dilation),
            )
            gated.append(mul(attention, part))
        fused = conv2d(mul(expanded, concat(gated, axis=1)), params.down_conv)
        return add(fused, plane)


def mha_forward(e: Tensor, params: MHAParams, ablation: AblationFlags = AblationFlags()) -> Tensor:
    """
    E [B, C, 1, T] to F [B, 1, C, T].
    """
    h = channel_attention_forward(e, params, ablation)
    if not ablation.is_enabled(Block.MGA):
        batch, channels, _, samples = h.shape
        return reshape(h, (batch, 1, channels, samples))
    return mga_forward(h, params.mga, e.shape[3])
