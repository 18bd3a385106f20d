from enum import Enum


class SplitTag(Enum):
    """
    SplitTag is an enumeration of the dataset partitions.

    Attributes:
        TRAIN (str): Windows used for fitting CSP and the network.
        VAL (str): Windows used for early stopping.
        TEST (str): Windows used for the reported accuracy.
        ALL (str): Windows not yet assigned to a partition.
    """

    TRAIN = "train"
    VAL = "val"
    TEST = "test"
    ALL = "all"
