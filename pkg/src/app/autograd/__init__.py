from app.autograd.ops import RunningStats
from app.autograd.tensor import (
    Tape,
    Tensor,
    as_tensor,
    backward,
    default_dtype,
    name_scope,
    shadow_precision,
)

__all__ = [
    "RunningStats",
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "default_dtype",
    "name_scope",
    "shadow_precision",
]
