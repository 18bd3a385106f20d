"""
Spatial-temporal convolution head and the full network forward pass.
"""

import logging

from app.autograd import Tensor, as_tensor, name_scope
from app.autograd.ops import adaptive_avg_pool2d, batch_norm, conv2d, elu, linear, reshape
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.network.mha import mha_forward
from app.network.params import POOL_WIDTH, BatchNormParams, ModelParams, STCParams
from app.schemas.config import AblationFlags
from app.services.enums.block import Block
from app.services.enums.mode import Mode

logger = logging.getLogger(__name__)


def _normalized(x: Tensor, bn: BatchNormParams, mode: Mode) -> Tensor:
    return elu(batch_norm(x, bn.gain, bn.shift, bn.running, mode.training))


def stc_forward(f: Tensor, params: STCParams, mode: Mode = Mode.EVAL) -> Tensor:
    """
    Temporal (1, 2) conv, spatial (C, 1) conv, each followed by batch norm and ELU,
    then average pooling of the remaining T - 1 samples into five bins.

    Args:
        f (Tensor): MHA output [B, 1, C, T].
        params (STCParams): Head parameters.
        mode (Mode): TRAIN updates the batch-norm running statistics.

    Returns:
        Tensor: [B, 5].
    """
    channels = params.spatial_conv.shape[2]
    if f.ndim != 4 or f.shape[1] != 1 or f.shape[2] != channels:
        detail = f"stc: expected input [B, 1, {channels}, T], got {f.shape}"
        logger.error(detail)
        raise ApplicationError(detail=detail, category=ErrorCategory.DIMENSION)
    if f.shape[3] - 1 < POOL_WIDTH:
        detail = (
            f"stc: a window of {f.shape[3]} samples leaves fewer than {POOL_WIDTH} "
            "pooling bins; use a longer decision window"
        )
        logger.error(detail)
        raise ApplicationError(detail=detail, category=ErrorCategory.CONFIG)

    with name_scope("stc"):
        temporal = _normalized(
            conv2d(f, params.temporal_conv, params.temporal_bias), params.temporal_bn, mode
        )
        spatial = _normalized(
            conv2d(temporal, params.spatial_conv, params.spatial_bias), params.spatial_bn, mode
        )
        return reshape(adaptive_avg_pool2d(spatial, (1, POOL_WIDTH)), (f.shape[0], POOL_WIDTH))


def model_forward(
    e: Tensor,
    params: ModelParams,
    ablation: AblationFlags | None = None,
    mode: Mode = Mode.EVAL,
) -> Tensor:
    """
    CSP-projected windows [B, C, 1, T] to class logits [B, 2].

    With STC ablated F is pooled straight to five values per example.
    """
    e = as_tensor(e)
    mask = ablation if ablation is not None else params.ablation
    features = mha_forward(e, params.mha, mask)
    if mask.is_enabled(Block.STC):
        pooled = stc_forward(features, params.stc, mode)
    else:
        pooled = reshape(adaptive_avg_pool2d(features, (1, POOL_WIDTH)), (e.shape[0], POOL_WIDTH))
    with name_scope("fc"):
        return linear(pooled, params.stc.fc_w, params.stc.fc_b)
