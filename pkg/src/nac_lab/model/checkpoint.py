"""模型检查点: 单个 JSON 文档, 浮点数写 17 位有效数字, 重新加载逐位一致"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from ..autodiff import Tensor
from ..errors import DataFormatError
from .momentum import MomentumState
from .network import (
    DenseLayer,
    EncoderModel,
    EncoderParams,
    Head,
    InferenceHead,
    ModelDims,
    ProjectionHead,
)

logger = logging.getLogger(__name__)


def _layer_to_dict(layer: DenseLayer) -> dict:
    return {"w": layer.weight.data.tolist(), "b": layer.bias.data.tolist()}


def _head_to_dict(head: Head) -> dict:
    return {"hidden": _layer_to_dict(head.hidden), "output": _layer_to_dict(head.output)}


def _layer_from_dict(data: dict, trainable: bool) -> DenseLayer:
    weight = np.array(data["w"], dtype=np.float64)
    bias = np.array(data["b"], dtype=np.float64)
    if weight.ndim != 2 or bias.shape != (weight.shape[0],):
        raise DataFormatError(f"检查点层形状非法: w{weight.shape} b{bias.shape}")
    if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
        raise DataFormatError("检查点包含非有限参数")
    return DenseLayer(weight=Tensor(weight, requires_grad=trainable), bias=Tensor(bias, requires_grad=trainable))


def _head_from_dict(cls: type, data: dict, trainable: bool) -> Head:
    return cls(
        hidden=_layer_from_dict(data["hidden"], trainable),
        output=_layer_from_dict(data["output"], trainable),
    )


def model_to_dict(model: EncoderModel, config_text: Optional[str] = None) -> dict:
    momentum = None
    if model.momentum is not None:
        momentum = {
            "decay": model.momentum.decay,
            "layers": [_layer_to_dict(layer) for layer in model.momentum.encoder.layers],
            "projection": _head_to_dict(model.momentum.projection),
        }
    return {
        "dims": model.dims.to_dict(),
        "seed": model.seed,
        "layers": [_layer_to_dict(layer) for layer in model.encoder.layers],
        "projection": _head_to_dict(model.projection),
        "inference": _head_to_dict(model.inference),
        "momentum": momentum,
        "config": config_text,
    }


def model_from_dict(data: dict) -> EncoderModel:
    try:
        dims = ModelDims.from_dict(data["dims"])
        model = EncoderModel(
            encoder=EncoderParams(layers=[_layer_from_dict(d, True) for d in data["layers"]]),
            projection=_head_from_dict(ProjectionHead, data["projection"], True),
            inference=_head_from_dict(InferenceHead, data["inference"], True),
            dims=dims,
            seed=int(data["seed"]),
        )
        slow = data.get("momentum")
        if slow is not None:
            model.momentum = MomentumState(
                encoder=EncoderParams(layers=[_layer_from_dict(d, False) for d in slow["layers"]]),
                projection=_head_from_dict(ProjectionHead, slow["projection"], False),
                decay=float(slow["decay"]),
            )
    except (KeyError, TypeError) as e:
        raise DataFormatError(f"检查点缺少字段或字段类型错误: {e}") from e

    widths = [dims.input_dim, *dims.hidden]
    actual = [layer.in_dim for layer in model.encoder.layers] + [model.encoder.layers[-1].out_dim]
    if actual != widths or model.projection.output.out_dim != dims.code_dim:
        raise DataFormatError(f"检查点层宽 {actual} 与 dims {dims} 不一致")
    return model


def encode_json(obj: Any) -> str:
    """紧凑 JSON, 浮点数按 17 位有效数字写出"""
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{encode_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(encode_json(v) for v in obj) + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise DataFormatError(f"检查点不能包含非有限值 {obj}")
        text = format(obj, ".17g")
        # 整数值补 ".0", 否则 -0.0 读回时丢失符号
        return text if any(c in text for c in ".e") else text + ".0"
    return json.dumps(obj)


def save_checkpoint(
    model: EncoderModel,
    path: Union[str, Path],
    config_text: Optional[str] = None,
) -> Path:
    """写出检查点 (UTF-8, LF)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = encode_json(model_to_dict(model, config_text))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(doc + "\n")
    logger.info(f"检查点已保存: {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> tuple[EncoderModel, Optional[str]]:
    """读取检查点, 返回 (模型, 训练时的配置文本)"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"检查点不是合法 JSON: {e.msg}", line=e.lineno) from e
    model = model_from_dict(data)
    logger.debug(f"已加载检查点 {path}: dims={model.dims}")
    return model, data.get("config")
