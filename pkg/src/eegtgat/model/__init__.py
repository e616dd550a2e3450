from .config import CONV_KERNELS, SEGMENT_LEN, ModelConfig, ablation_config
from .network import (
    gatv2_layer,
    model_forward,
    readout_classify,
    temporal_attention,
    temporal_dropout,
    temporal_encoder,
)
from .params import (
    ConvStage,
    GATLayerParams,
    ModelParams,
    init_params,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "CONV_KERNELS", "SEGMENT_LEN", "ModelConfig", "ablation_config",
    "gatv2_layer", "model_forward", "readout_classify", "temporal_attention",
    "temporal_dropout", "temporal_encoder", "ConvStage", "GATLayerParams",
    "ModelParams", "init_params", "load_checkpoint", "save_checkpoint",
]
