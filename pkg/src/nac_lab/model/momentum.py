"""动量模型: 在线参数的指数滑动平均副本"""

import logging
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..errors import DomainError, ShapeError
from .network import DenseLayer, EncoderParams, Pathway, ProjectionHead

logger = logging.getLogger(__name__)


@dataclass
class MomentumState(Pathway):
    """
    动量副本: 只复制编码器与投影头

    所有参数 requires_grad=False, 不进入计算图。队列损失的 r̂ 由在线推断头作用于动量表示得到,
    推断头因此始终接收梯度, 不需要滑动平均副本。
    """

    decay: float = 0.99

    @classmethod
    def from_model(cls, live: Pathway, decay: float) -> "MomentumState":
        if not (0.0 <= decay < 1.0):
            raise DomainError(f"动量衰减 m={decay} 不在 [0, 1) 内")

        def frozen(layer: DenseLayer) -> DenseLayer:
            return DenseLayer(weight=Tensor(layer.weight.data.copy()), bias=Tensor(layer.bias.data.copy()))

        return cls(
            encoder=EncoderParams(layers=[frozen(layer) for layer in live.encoder.layers]),
            projection=ProjectionHead(hidden=frozen(live.projection.hidden), output=frozen(live.projection.output)),
            decay=decay,
        )


def momentum_update(live: Pathway, momentum: MomentumState) -> MomentumState:
    """θ̂ ← m·θ̂ + (1−m)·θ, 逐参数原地更新 (在线模型的推断头不参与)"""
    live_params = live.parameters()
    slow_params = momentum.parameters()
    shared = [name for name in live_params if not name.startswith("inference.")]
    if shared != list(slow_params):
        raise ShapeError(f"动量模型结构与在线模型不一致: {list(slow_params)} vs {list(live_params)}")

    m = momentum.decay
    for name, slow in slow_params.items():
        fast = live_params[name]
        if slow.shape != fast.shape:
            raise ShapeError(f"{name}: 动量参数形状 {slow.shape} 与在线参数 {fast.shape} 不一致")
        slow.data = m * slow.data + (1.0 - m) * fast.data
    return momentum


def parameter_distance(a: Pathway, b: Pathway) -> float:
    """两套参数在共有参数名上的欧氏距离"""
    other = b.parameters()
    total = 0.0
    for name, tensor in a.parameters().items():
        if name not in other:
            continue
        diff = tensor.data - other[name].data
        total += float(np.sum(diff * diff))
    return float(np.sqrt(total))
