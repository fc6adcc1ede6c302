"""带动量的 SGD 与学习率调度"""

import logging
import math
from typing import Mapping, Optional

import numpy as np

from ..autodiff import Tensor
from ..config import TrainConfig
from ..errors import ShapeError

logger = logging.getLogger(__name__)

WEIGHT_DECAY = 1e-6


def optimizer_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    lr: float,
    beta: float,
    velocity: dict[str, np.ndarray],
    weight_decay: float = WEIGHT_DECAY,
) -> Mapping[str, Tensor]:
    """
    经典动量更新

    g ← grad + wd·θ; v ← β·v + g; θ ← θ − lr·v
    """
    for name, param in params.items():
        grad = grads[name]
        if grad.shape != param.shape:
            raise ShapeError(f"{name}: 梯度形状 {grad.shape} 与参数 {param.shape} 不一致")
        g = grad + weight_decay * param.data
        v = velocity.get(name)
        v = g if v is None else beta * v + g
        velocity[name] = v
        param.data = param.data - lr * v
    return params


class MomentumSGD:
    """持有速度状态的优化器"""

    def __init__(self, beta: float = 0.9, weight_decay: float = WEIGHT_DECAY):
        self.beta = beta
        self.weight_decay = weight_decay
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], lr: float) -> None:
        optimizer_step(params, grads, lr, self.beta, self.velocity, self.weight_decay)


def lr_schedule(
    step: int,
    total_steps: int,
    config: TrainConfig,
    warmup_steps: Optional[int] = None,
) -> float:
    """
    线性预热后余弦衰减

    Args:
        step: 当前步, 0 <= step <= total_steps
        total_steps: 总步数
        config: 提供 base_lr 与 warmup_epochs
        warmup_steps: 预热步数; 默认按 warmup_epochs/epochs 的比例折算

    Returns:
        step 0 为 0, 预热结束为 base_lr, 最后一步为 0
    """
    if total_steps <= 0:
        return 0.0
    step = min(max(step, 0), total_steps)
    if warmup_steps is None:
        warmup_steps = round(total_steps * config.warmup_epochs / config.epochs)

    if warmup_steps > 0 and step <= warmup_steps:
        return config.base_lr * step / warmup_steps
    if total_steps == warmup_steps:
        return config.base_lr
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return config.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
