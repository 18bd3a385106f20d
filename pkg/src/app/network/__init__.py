from app.network.mha import mha_forward
from app.network.params import ModelParams, block_sizes, count_params, init_params
from app.network.stc import model_forward, stc_forward

__all__ = [
    "ModelParams",
    "block_sizes",
    "count_params",
    "init_params",
    "mha_forward",
    "model_forward",
    "stc_forward",
]
