"""NAC 训练循环"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..autodiff import Tape, backward
from ..coding.channel import ChannelSpec
from ..coding.codes import sign_codes
from ..config import TrainConfig
from ..errors import ConfigError, DomainError, NumericalError, ShapeError, TrainingDivergedError
from ..model.momentum import MomentumState, momentum_update
from ..model.network import EncoderModel, init_model
from ..utils import Stream, make_rng
from .augment import build_views
from .objective import LossBreakdown, nac_loss, nac_mq_loss, simclr_loss
from .optimizer import MomentumSGD, lr_schedule
from .queue import MomentumQueue

logger = logging.getLogger(__name__)

LOG_COLUMNS = [
    "step",
    "lr",
    "total",
    "variational",
    "subsample",
    "l2",
    "mean_code_norm",
    "distinct_codes_estimate",
]


@dataclass
class TrainState:
    """训练中的可变状态"""

    model: EncoderModel
    optimizer: MomentumSGD
    queue: Optional[MomentumQueue] = None
    step: int = 0


@dataclass
class TrainResult:
    model: EncoderModel
    log: pd.DataFrame
    steps: int
    history: list[LossBreakdown] = field(default_factory=list, repr=False)

    @property
    def initial_loss(self) -> float:
        return self.history[0].total

    @property
    def final_loss(self) -> float:
        return self.history[-1].total


def init_state(config: TrainConfig, input_dim: int) -> TrainState:
    """按配置初始化模型; nac_mq 额外创建动量副本与队列"""
    problems = config.validate()
    if problems:
        raise ConfigError(problems)
    model = init_model(config.model_dims(input_dim), config.seed)
    queue = None
    if config.loss_kind == "nac_mq":
        model.momentum = MomentumState.from_model(model, config.momentum_decay)
        queue = MomentumQueue(config.queue_size, config.code_dim)
    return TrainState(model=model, optimizer=MomentumSGD(beta=config.momentum_beta, weight_decay=config.weight_decay), queue=queue)


def compute_loss(state: TrainState, views: np.ndarray, config: TrainConfig) -> LossBreakdown:
    """按 loss_kind 计算当前批的损失"""
    spec = ChannelSpec(config.p)
    model = state.model
    if config.loss_kind == "nac":
        return nac_loss(views, model, spec, config.denominator)
    if config.loss_kind == "simclr":
        return simclr_loss(views, model, config.temperature)

    prefilled = state.queue.is_empty
    if prefilled:
        warm = model.momentum.encode(views).z.data
        state.queue.push(warm)
        logger.warning(f"第 {state.step} 步: 动量队列为空, 用本步 {warm.shape[0]} 行动量特征预填充")
    breakdown = nac_mq_loss(
        views, model, model.momentum, state.queue.contents(), spec, config.l2_lambda, config.denominator
    )
    breakdown.aux["queue_prefilled"] = prefilled
    return breakdown


def train_step(
    state: TrainState,
    batch: np.ndarray,
    config: TrainConfig,
    lr: float,
    rng: Optional[np.random.Generator] = None,
) -> LossBreakdown:
    """
    一步训练: 构造 2K 个视图, 计算损失, 反向传播并更新参数

    nac_mq 在参数更新后把本步动量通路的 2K 行编码压入队列 (预填充的那一步除外), 再刷新动量参数。
    损失计算中的数值错误与定义域错误都转换为 TrainingDivergedError。
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.shape[0] != config.batch_size:
        raise ShapeError(f"批大小应为 K={config.batch_size}, 实际 {batch.shape[0]}")
    rng = rng if rng is not None else make_rng(config.seed, Stream.AUGMENT, state.step)
    views = build_views(batch, config.augment, rng)

    params = state.model.parameters()
    try:
        with Tape():
            breakdown = compute_loss(state, views, config)
            grads = backward(breakdown.loss, list(params.values()))
    except NumericalError as e:
        raise TrainingDivergedError(state.step, e.kind, str(e)) from e
    except DomainError as e:
        raise TrainingDivergedError(state.step, None, str(e)) from e

    if not np.isfinite(breakdown.total):
        raise TrainingDivergedError(state.step, None, f"损失为 {breakdown.total}")

    state.optimizer.step(params, {name: grads[t] for name, t in params.items()}, lr)

    if config.loss_kind == "nac_mq":
        # 预填充的那一步, 队列里已经是这些行
        if not breakdown.aux["queue_prefilled"]:
            state.queue.push(breakdown.aux["momentum_z"])
        momentum_update(state.model, state.model.momentum)

    logger.debug(f"step={state.step} lr={lr:.6g} loss={breakdown.total:.6g}")
    state.step += 1
    return breakdown


class Trainer:
    """
    按 epoch 组织训练

    每个 epoch 用 SHUFFLE 流打乱样本, 每步固定 K 个样本 (丢弃最后不足 K 的部分),
    每个 epoch 结束写一行训练日志。
    """

    def __init__(self, config: TrainConfig, log_path: Union[str, Path, None] = None):
        self.config = config
        self.log_path = Path(log_path) if log_path else None

    def fit(self, x: np.ndarray) -> TrainResult:
        config = self.config
        x = np.asarray(x, dtype=np.float64)
        n = x.shape[0]
        steps_per_epoch = n // config.batch_size
        if steps_per_epoch == 0:
            raise ShapeError(f"样本数 {n} 少于批大小 K={config.batch_size}")
        total_steps = steps_per_epoch * config.epochs
        warmup_steps = steps_per_epoch * config.warmup_epochs

        state = init_state(config, x.shape[1])
        rows: list[dict] = []
        history: list[LossBreakdown] = []
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(columns=LOG_COLUMNS).to_csv(self.log_path, index=False, lineterminator="\n")

        logger.info(
            f"开始训练: loss={config.loss_kind}, N={n}, K={config.batch_size}, "
            f"epochs={config.epochs}, 总步数={total_steps}"
        )

        for epoch in range(config.epochs):
            order = make_rng(config.seed, Stream.SHUFFLE, epoch).permutation(n)
            epoch_losses: list[LossBreakdown] = []
            epoch_codes: list[np.ndarray] = []
            lr = 0.0
            for b in range(steps_per_epoch):
                batch = x[order[b * config.batch_size : (b + 1) * config.batch_size]]
                lr = lr_schedule(state.step + 1, total_steps, config, warmup_steps)
                breakdown = train_step(state, batch, config, lr)
                epoch_losses.append(breakdown)
                epoch_codes.append(sign_codes(breakdown.aux["a"]))

            row = self._epoch_row(state.step, lr, epoch_losses, epoch_codes)
            rows.append(row)
            history.extend(epoch_losses)
            if self.log_path is not None:
                pd.DataFrame([row], columns=LOG_COLUMNS).to_csv(
                    self.log_path, mode="a", header=False, index=False, float_format="%.6g", lineterminator="\n"
                )
            logger.info(
                f"epoch {epoch + 1}/{config.epochs}: loss={row['total']:.4f} "
                f"(变分 {row['variational']:.4f}, 子采样 {row['subsample']:.4f}, l2 {row['l2']:.4f}) "
                f"lr={lr:.4g} mean|z|²={row['mean_code_norm']:.4f} 不同编码≈{row['distinct_codes_estimate']}"
            )

        log = pd.DataFrame(rows, columns=LOG_COLUMNS)
        return TrainResult(model=state.model, log=log, steps=state.step, history=history)

    @staticmethod
    def _epoch_row(
        step: int,
        lr: float,
        losses: list[LossBreakdown],
        codes: list[np.ndarray],
    ) -> dict:
        frame = pd.DataFrame([b.as_row() for b in losses])
        norms = [float(np.mean(np.sum(b.aux["z"] ** 2, axis=1))) for b in losses]
        distinct = int(np.unique(np.concatenate(codes), axis=0).shape[0])
        return {
            "step": step,
            "lr": lr,
            "total": float(frame["total"].mean()),
            "variational": float(frame["variational"].mean()),
            "subsample": float(frame["subsample"].mean()),
            "l2": float(frame["l2"].mean()),
            "mean_code_norm": float(np.mean(norms)),
            "distinct_codes_estimate": distinct,
        }


def train(config: TrainConfig, x: np.ndarray, log_path: Union[str, Path, None] = None) -> TrainResult:
    return Trainer(config, log_path).fit(x)
