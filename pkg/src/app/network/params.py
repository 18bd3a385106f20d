"""
Trainable tensors of the network, grouped per block, with stable checkpoint names.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from app.autograd import RunningStats, Tensor, default_dtype
from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.schemas.config import AblationFlags, ModelConfig
from app.services.enums.block import Block

logger = logging.getLogger(__name__)

MTA_KERNELS = (2, 4, 6)
MGA_KERNELS = (3, 5, 7)
POOL_WIDTH = 5
CLASSES = 2

_DECAY_EXEMPT_SUFFIXES = (".ln.gain", ".ln.shift", "_bn.gain", "_bn.shift")


@dataclass
class MTABranch:
    weight: Tensor
    bias: Tensor
    ln_gain: Tensor
    ln_shift: Tensor

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[3]


@dataclass
class MTAParams:
    spatial_conv: Tensor
    up_conv: Tensor
    branches: list[MTABranch]
    recover_conv: Tensor


@dataclass
class MGAParams:
    up_conv: Tensor
    dilated_convs: list[Tensor]
    down_conv: Tensor
    dilation: int | None = None


@dataclass
class MHAParams:
    ca_conv_in: Tensor
    ca_dwconv: Tensor
    log_t: Tensor
    ca_conv_out: Tensor
    mta: MTAParams
    mga: MGAParams

    @property
    def temperature(self) -> float:
        return float(np.exp(self.log_t.item()))


@dataclass
class BatchNormParams:
    gain: Tensor
    shift: Tensor
    running: RunningStats


@dataclass
class STCParams:
    temporal_conv: Tensor
    temporal_bias: Tensor
    temporal_bn: BatchNormParams
    spatial_conv: Tensor
    spatial_bias: Tensor
    spatial_bn: BatchNormParams
    fc_w: Tensor
    fc_b: Tensor


@dataclass
class ModelParams:
    """
    Every trainable tensor of the network plus the ablation mask in force.

    All tensors are materialized regardless of the mask, so the same seed always
    yields the same values; the mask decides which blocks run and are counted.
    """

    config: ModelConfig
    mha: MHAParams
    stc: STCParams
    ablation: AblationFlags = AblationFlags()

    def named_tensors(self) -> dict[str, Tensor]:
        mha, mta, mga, stc = self.mha, self.mha.mta, self.mha.mga, self.stc
        named = {
            "mha.ca_conv_in.weight": mha.ca_conv_in,
            "mha.ca_dwconv.weight": mha.ca_dwconv,
            "mha.log_t": mha.log_t,
            "mha.ca_conv_out.weight": mha.ca_conv_out,
            "mha.mta.spatial_conv.weight": mta.spatial_conv,
            "mha.mta.up_conv.weight": mta.up_conv,
        }
        for branch in mta.branches:
            prefix = f"mha.mta.branch{branch.kernel_size}"
            named[f"{prefix}.weight"] = branch.weight
            named[f"{prefix}.bias"] = branch.bias
            named[f"{prefix}.ln.gain"] = branch.ln_gain
            named[f"{prefix}.ln.shift"] = branch.ln_shift
        named["mha.mta.recover_conv.weight"] = mta.recover_conv
        named["mha.mga.up_conv.weight"] = mga.up_conv
        for kernel in mga.dilated_convs:
            named[f"mha.mga.dconv{kernel.shape[-1]}.weight"] = kernel
        named["mha.mga.down_conv.weight"] = mga.down_conv
        named.update(
            {
                "stc.temporal_conv.weight": stc.temporal_conv,
                "stc.temporal_conv.bias": stc.temporal_bias,
                "stc.temporal_bn.gain": stc.temporal_bn.gain,
                "stc.temporal_bn.shift": stc.temporal_bn.shift,
                "stc.spatial_conv.weight": stc.spatial_conv,
                "stc.spatial_conv.bias": stc.spatial_bias,
                "stc.spatial_bn.gain": stc.spatial_bn.gain,
                "stc.spatial_bn.shift": stc.spatial_bn.shift,
                "fc.weight": stc.fc_w,
                "fc.bias": stc.fc_b,
            }
        )
        return named

    def buffers(self) -> dict[str, RunningStats]:
        return {
            "stc.temporal_bn": self.stc.temporal_bn.running,
            "stc.spatial_bn": self.stc.spatial_bn.running,
        }

    def trainable(self, ablation: AblationFlags | None = None) -> dict[str, Tensor]:
        mask = ablation if ablation is not None else self.ablation
        return {
            name: tensor
            for name, tensor in self.named_tensors().items()
            if (block := block_of(name)) is None or mask.is_enabled(block)
        }

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: t.data.copy() for name, t in self.named_tensors().items()}
        for name, stats in self.buffers().items():
            state[f"{name}.running_mean"] = stats.mean.copy()
            state[f"{name}.running_var"] = stats.var.copy()
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """
        Overwrite tensor values and running statistics from ``state``.

        Raises:
            ApplicationError: If a name is missing or a shape differs.
        """
        tensors = self.named_tensors()
        for name, tensor in tensors.items():
            tensor.data = _checked_array(state, name, tensor.shape, tensor.dtype)
        for name, stats in self.buffers().items():
            stats.mean = _checked_array(state, f"{name}.running_mean", stats.mean.shape, stats.mean.dtype)
            stats.var = _checked_array(state, f"{name}.running_var", stats.var.shape, stats.var.dtype)

    def with_ablation(self, ablation: AblationFlags) -> "ModelParams":
        return replace(self, ablation=ablation)

    def zero_grad(self) -> None:
        for tensor in self.named_tensors().values():
            tensor.zero_grad()


def _checked_array(
    state: dict[str, np.ndarray], name: str, shape: tuple[int, ...], dtype: np.dtype
) -> np.ndarray:
    if name not in state:
        raise ApplicationError(
            detail=f"Parameter {name} is missing from the checkpoint",
            category=ErrorCategory.FORMAT,
        )
    array = np.asarray(state[name])
    if array.shape != shape:
        raise ApplicationError(
            detail=f"Parameter {name} has shape {array.shape}, expected {shape}",
            category=ErrorCategory.DIMENSION,
        )
    return array.astype(dtype, copy=True)


def block_of(name: str) -> Block | None:
    """
    The ablatable block owning a tensor name, or None for the classifier.
    """
    if name.startswith("mha.mta."):
        return Block.MTA
    if name.startswith("mha.mga."):
        return Block.MGA
    if name.startswith("mha."):
        return Block.CA
    if name.startswith("stc."):
        return Block.STC
    return None


def is_decay_exempt(name: str) -> bool:
    return name == "mha.log_t" or name.endswith(_DECAY_EXEMPT_SUFFIXES)


def count_params(params: ModelParams, ablation: AblationFlags | None = None) -> int:
    """
    Number of trainable scalars under the ablation mask. CSP filters are frozen and
    never part of ``params``.
    """
    return sum(t.size for t in params.trainable(ablation).values())


def block_sizes(config: ModelConfig) -> dict[str, int]:
    """
    Closed-form trainable sizes per block, keyed by block value plus ``"fc"``.
    """
    c, t, k1 = config.channels, config.samples, config.temporal_filters
    return {
        Block.CA.value: 3 * c * c + 3 * c * 3 + 1 + c * c,
        Block.MTA.value: c + 3 + sum(k + 1 + 2 * t for k in MTA_KERNELS) + c,
        Block.MGA.value: 3 + sum(k * k for k in MGA_KERNELS) + 3,
        Block.STC.value: 2 * k1 + k1 + 2 * k1 + k1 * c + 1 + 2,
        "fc": CLASSES * POOL_WIDTH + CLASSES,
    }


class _Initializer:
    """
    Seeded fan-in uniform initialization, bound 1/sqrt(fan_in).
    """

    def __init__(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def uniform(self, shape: tuple[int, ...], fan_in: int) -> Tensor:
        bound = 1.0 / math.sqrt(fan_in)
        return Tensor(self.rng.uniform(-bound, bound, size=shape), requires_grad=True)

    def conv(self, out_ch: int, in_ch: int, kh: int, kw: int) -> Tensor:
        return self.uniform((out_ch, in_ch, kh, kw), fan_in=in_ch * kh * kw)

    @staticmethod
    def constant(shape: tuple[int, ...], value: float) -> Tensor:
        return Tensor(np.full(shape, value), requires_grad=True)


def init_params(
    config: ModelConfig,
    seed: int = 0,
    ablation: AblationFlags = AblationFlags(),
) -> ModelParams:
    """
    Build a freshly initialized parameter set.

    Args:
        config (ModelConfig): Network dimensions.
        seed (int): Seed of the initializer.
        ablation (AblationFlags): Blocks switched off.

    Returns:
        ModelParams: The parameters, in the current default precision.
    """
    c, t, k1 = config.channels, config.samples, config.temporal_filters
    init = _Initializer(seed)

    mha = MHAParams(
        ca_conv_in=init.conv(3 * c, c, 1, 1),
        ca_dwconv=init.conv(3 * c, 1, 1, 3),
        log_t=_Initializer.constant((1,), 0.0),
        ca_conv_out=init.conv(c, c, 1, 1),
        mta=MTAParams(
            spatial_conv=init.conv(1, c, 1, 1),
            up_conv=init.conv(3, 1, 1, 1),
            branches=[
                MTABranch(
                    weight=init.conv(1, 1, 1, k),
                    bias=init.uniform((1,), fan_in=k),
                    ln_gain=_Initializer.constant((t,), 1.0),
                    ln_shift=_Initializer.constant((t,), 0.0),
                )
                for k in MTA_KERNELS
            ],
            recover_conv=init.conv(c, 1, 1, 1),
        ),
        mga=MGAParams(
            up_conv=init.conv(3, 1, 1, 1),
            dilated_convs=[init.conv(1, 1, k, k) for k in MGA_KERNELS],
            down_conv=init.conv(1, 3, 1, 1),
            dilation=config.dilation,
        ),
    )
    stc = STCParams(
        temporal_conv=init.conv(k1, 1, 1, 2),
        temporal_bias=init.uniform((k1,), fan_in=2),
        temporal_bn=BatchNormParams(
            gain=_Initializer.constant((k1,), 1.0),
            shift=_Initializer.constant((k1,), 0.0),
            running=RunningStats.initial(k1, default_dtype()),
        ),
        spatial_conv=init.conv(1, k1, c, 1),
        spatial_bias=init.uniform((1,), fan_in=k1 * c),
        spatial_bn=BatchNormParams(
            gain=_Initializer.constant((1,), 1.0),
            shift=_Initializer.constant((1,), 0.0),
            running=RunningStats.initial(1, default_dtype()),
        ),
        fc_w=init.uniform((CLASSES, POOL_WIDTH), fan_in=POOL_WIDTH),
        fc_b=init.uniform((CLASSES,), fan_in=POOL_WIDTH),
    )
    params = ModelParams(config=config, mha=mha, stc=stc, ablation=ablation)
    logger.info(
        f"Initialized parameters for C={c}, T={t}, k1={k1} with seed {seed}: "
        f"{count_params(params)} trainable under {ablation.label}"
    )
    return params
