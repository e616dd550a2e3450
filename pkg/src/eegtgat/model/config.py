"""Model hyperparameters and ablation switches."""

from dataclasses import asdict, dataclass

from ..errors import ParameterError

# fixed multi-scale kernel lengths: half, quarter, eighth of a second at 256 Hz
CONV_KERNELS = (128, 64, 32)
SEGMENT_LEN = 256


@dataclass
class ModelConfig:
    enable_temporal_attention: bool = True
    enable_temporal_dropout: bool = True
    temporal_dropout_p: float = 0.1
    rescale_temporal_dropout: bool = False
    conv_channels: tuple = (16, 16, 16)
    spatial_dropout_p: float = 0.2
    spatial_kernel_len: int = 1
    time_chunks: int = 8
    gat1_heads: int = 4
    gat1_head_dim: int = 16
    gat2_dim: int = 32
    classifier_hidden: int = 32
    classifier_dropout_p: float = 0.3
    n_classes: int = 2

    def __post_init__(self):
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        if len(self.conv_channels) != 3 or min(self.conv_channels) < 1:
            raise ParameterError(f"conv_channels must be 3 positive ints, got {self.conv_channels}")
        for name in ("temporal_dropout_p", "spatial_dropout_p", "classifier_dropout_p"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ParameterError(f"{name} must be in [0, 1), got {p}")
        if self.spatial_kernel_len < 1 or self.spatial_kernel_len % 2 == 0:
            raise ParameterError(f"spatial_kernel_len must be odd, got {self.spatial_kernel_len}")
        if self.time_chunks < 1 or SEGMENT_LEN % self.time_chunks != 0:
            raise ParameterError(f"time_chunks must divide {SEGMENT_LEN}, got {self.time_chunks}")
        if self.gat1_heads < 1 or self.gat1_head_dim < 1 or self.gat2_dim < 1:
            raise ParameterError("graph attention sizes must be positive")
        if self.classifier_hidden < 1 or self.n_classes < 2:
            raise ParameterError("classifier sizes must be positive with >= 2 classes")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


def ablation_config(base: ModelConfig, arm: str) -> ModelConfig:
    """Map an ablation arm name onto the two temporal switches.

    Arms: 'none' (full model), 'no-tdrop', 'no-tattn', 'no-both'.
    """
    arms = {
        "none": (True, True),
        "no-tdrop": (True, False),
        "no-tattn": (False, True),
        "no-both": (False, False),
    }
    if arm not in arms:
        raise ParameterError(f"unknown ablation arm {arm!r}; choose from {sorted(arms)}")
    attn, tdrop = arms[arm]
    d = base.to_dict()
    d["enable_temporal_attention"] = attn
    d["enable_temporal_dropout"] = tdrop
    return ModelConfig.from_dict(d)
