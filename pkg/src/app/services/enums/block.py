from enum import Enum


class Block(Enum):
    """
    Block is an enumeration of the network blocks that can be switched off for ablation.

    Attributes:
        CA (str): Channel attention (query/key/value projection and the C x C attention).
        MTA (str): Multi-scale temporal attention applied to the values.
        MGA (str): Multi-scale global attention with the residual connection.
        STC (str): Spatiotemporal convolution aggregation before the classifier.
    """

    CA = "ca"
    MTA = "mta"
    MGA = "mga"
    STC = "stc"

    @classmethod
    def from_string(cls, value: str) -> "Block":
        """
        Create a Block instance from a string.

        Args:
            value (str): The string representation of the Block.

        Returns:
            Block: An instance of Block corresponding to the given string.
        """
        return cls(value.strip().lower())
