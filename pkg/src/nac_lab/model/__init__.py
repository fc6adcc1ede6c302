"""NAC 模型"""

from .checkpoint import load_checkpoint, model_from_dict, model_to_dict, save_checkpoint
from .momentum import MomentumState, momentum_update, parameter_distance
from .network import (
    DenseLayer,
    Encoded,
    EncoderModel,
    EncoderParams,
    InferenceHead,
    ModelDims,
    Pathway,
    ProjectionHead,
    count_parameters,
    init_model,
)

__all__ = [
    "DenseLayer",
    "Encoded",
    "EncoderModel",
    "EncoderParams",
    "InferenceHead",
    "ModelDims",
    "MomentumState",
    "Pathway",
    "ProjectionHead",
    "count_parameters",
    "init_model",
    "load_checkpoint",
    "model_from_dict",
    "model_to_dict",
    "momentum_update",
    "parameter_distance",
    "save_checkpoint",
]
