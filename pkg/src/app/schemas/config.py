from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.services.enums.block import Block

# Trainable-parameter order of magnitude reported for the reference network.
REFERENCE_PARAM_BUDGET = "0.02M"

# Ablation rows compared by the ``ablate`` command.
DEFAULT_VARIANTS = ("ca", "mta", "mga", "mta+ca", "stc")


def dilation_for_window(samples: int) -> int:
    """
    MGA dilation for a window of ``samples``: max(1, round(samples / 32)).
    """
    return max(1, round(samples / 32))


class AblationFlags(BaseModel):
    """
    The set of network blocks switched off for an ablation run.

    Attributes:
        disabled (frozenset[Block]): Blocks removed from the forward pass and the
            trainable-parameter count. Empty for the complete network.
    """

    model_config = ConfigDict(frozen=True)

    disabled: frozenset[Block] = frozenset()

    def is_enabled(self, block: Block) -> bool:
        return block not in self.disabled

    @property
    def label(self) -> str:
        if not self.disabled:
            return "full"
        return "w/o " + "+".join(sorted(block.value for block in self.disabled))

    @classmethod
    def from_variant(cls, variant: str) -> "AblationFlags":
        """
        Parse a variant such as ``"mta+ca"`` or ``"full"``.

        Args:
            variant (str): Block names joined with ``+``.

        Returns:
            AblationFlags: The parsed flags.

        Raises:
            ApplicationError: CONFIG error naming an unknown block.
        """
        variant = variant.strip().lower()
        if variant in ("", "full"):
            return cls()
        try:
            return cls(disabled=frozenset(Block.from_string(v) for v in variant.split("+")))
        except ValueError as ex:
            raise ApplicationError(
                detail=f"Unknown ablation variant {variant!r}; blocks are ca, mta, mga, stc",
                category=ErrorCategory.CONFIG,
            ) from ex


class ModelConfig(BaseModel):
    """
    Network dimensions.

    Attributes:
        channels (int): C, the number of CSP components fed to the network.
        samples (int): T, the number of samples per decision window.
        temporal_filters (int): k1, output channels of the STC temporal convolution.
        dilation (int | None): MGA dilation override; derived from T when None.
    """

    model_config = ConfigDict(frozen=True)

    channels: int = Field(default=16, ge=1)
    samples: int = Field(ge=1)
    temporal_filters: int = Field(default=8, ge=1)
    dilation: int | None = Field(default=None, ge=1)

    @property
    def resolved_dilation(self) -> int:
        if self.dilation is not None:
            return self.dilation
        return dilation_for_window(self.samples)


class TrainConfig(BaseModel):
    """
    Training protocol: batching, optimizer, early stopping and model dimensions.
    """

    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(default=32, gt=0)
    max_epochs: int = Field(default=100, gt=0)
    patience: int = Field(default=15, gt=0)
    lr: float = Field(default=5e-3, gt=0)
    weight_decay: float = Field(default=3e-4, ge=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    seed: int = 0
    ablation: AblationFlags = AblationFlags()
    channels: int = Field(default=16, ge=2)
    temporal_filters: int = Field(default=8, gt=0)
    dilation: int | None = Field(default=None, ge=1)
    csp_shrinkage: float = Field(default=0.05, ge=0, lt=1)

    @model_validator(mode="after")
    def check_patience(self) -> "TrainConfig":
        if self.patience >= self.max_epochs:
            raise ValueError(
                f"patience ({self.patience}) must be smaller than max_epochs ({self.max_epochs})"
            )
        return self

    def to_model_config(self, samples: int) -> ModelConfig:
        return ModelConfig(
            channels=self.channels,
            samples=samples,
            temporal_filters=self.temporal_filters,
            dilation=self.dilation,
        )


class RunConfig(BaseModel):
    """
    The JSON document driving ``train``, ``eval``, ``ablate`` and ``params``.

    Unknown keys are rejected. ``resolved`` materializes every derived default so the
    persisted copy reproduces a run exactly.
    """

    model_config = ConfigDict(extra="forbid")

    data_dir: Path | None = None
    output_dir: Path = Path("runs/default")
    subjects: list[str] | None = None
    sample_rate: float = Field(default=128.0, gt=0)
    window_seconds: float = Field(default=1.0, gt=0)
    train_hop_seconds: float | None = Field(default=None, gt=0)
    eval_hop_seconds: float | None = Field(default=None, gt=0)
    split_ratios: tuple[int, int, int] = (8, 1, 1)
    channels: int = Field(default=16, ge=2)
    temporal_filters: int = Field(default=8, gt=0)
    dilation: int | None = Field(default=None, ge=1)
    csp_shrinkage: float = Field(default=0.05, ge=0, lt=1)
    batch_size: int = Field(default=32, gt=0)
    max_epochs: int = Field(default=100, gt=0)
    patience: int = Field(default=15, gt=0)
    lr: float = Field(default=5e-3, gt=0)
    weight_decay: float = Field(default=3e-4, ge=0)
    seed: int = 0
    ablation: list[Block] = []

    @property
    def samples(self) -> int:
        return round(self.window_seconds * self.sample_rate)

    def resolved(self, sample_rate: float | None = None) -> "RunConfig":
        """
        Return a copy with hops, dilation and sample rate filled in.

        Args:
            sample_rate (float | None): The sample rate of the loaded data, if any.

        Returns:
            RunConfig: The fully resolved configuration.
        """
        rate = sample_rate if sample_rate is not None else self.sample_rate
        samples = round(self.window_seconds * rate)
        return self.model_copy(
            update={
                "sample_rate": rate,
                "train_hop_seconds": self.train_hop_seconds or self.window_seconds / 2,
                "eval_hop_seconds": self.eval_hop_seconds or self.window_seconds,
                "dilation": self.to_model_config_for(samples).resolved_dilation,
            }
        )

    def to_model_config_for(self, samples: int) -> ModelConfig:
        return ModelConfig(
            channels=self.channels,
            samples=samples,
            temporal_filters=self.temporal_filters,
            dilation=self.dilation,
        )

    def ablation_flags(self) -> AblationFlags:
        return AblationFlags(disabled=frozenset(self.ablation))

    def to_train_config(self, ablation: AblationFlags | None = None) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            lr=self.lr,
            weight_decay=self.weight_decay,
            seed=self.seed,
            ablation=ablation if ablation is not None else self.ablation_flags(),
            channels=self.channels,
            temporal_filters=self.temporal_filters,
            dilation=self.dilation,
            csp_shrinkage=self.csp_shrinkage,
        )


class SynthConfig(BaseModel):
    """
    Parameters of the synthetic two-class EEG generator.

    Attributes:
        subjects (int): Number of recordings (one per subject).
        c_raw (int): Number of raw channels.
        sample_rate (float): Sampling rate in Hz.
        duration (float): Recording length in seconds.
        class_gap (float): Power of the class-specific sources relative to the unit noise.
        seed (int): Seed of the generator.
        segment_seconds (float): Length of each constant-attention segment.
    """

    model_config = ConfigDict(frozen=True)

    subjects: int = Field(default=2, gt=0)
    c_raw: int = Field(default=24, ge=2)
    sample_rate: float = Field(default=128.0, gt=0)
    duration: float = Field(default=600.0, gt=0)
    class_gap: float = Field(default=4.0, gt=0)
    seed: int = 0
    segment_seconds: float = Field(default=5.0, gt=0)
