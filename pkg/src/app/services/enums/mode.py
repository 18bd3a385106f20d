from enum import Enum


class Mode(Enum):
    """
    Mode selects how batch normalization behaves in a forward pass.

    Attributes:
        TRAIN (str): Normalize with batch statistics and update running statistics.
        EVAL (str): Normalize with running statistics; no state is mutated.
    """

    TRAIN = "train"
    EVAL = "eval"

    @property
    def training(self) -> bool:
        return self is Mode.TRAIN
