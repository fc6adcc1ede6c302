"""训练目标的有限差分梯度检查"""

import logging
from dataclasses import dataclass

import numpy as np

from ..autodiff import GradCheckReport, check_parameters
from ..coding.channel import ChannelSpec
from ..config import TrainConfig
from ..model.momentum import MomentumState
from ..model.network import EncoderModel, ModelDims, init_model
from ..utils import Stream, make_rng
from .objective import nac_loss, nac_mq_loss, simclr_loss

logger = logging.getLogger(__name__)

# 小模型, 保证逐坐标差分的开销可控
SUITE_DIMS = ModelDims(input_dim=2, hidden=(6, 5), code_dim=4)
SUITE_PAIRS = 3
SUITE_QUEUE = 8
# 偏置抖动的标准差; 全零偏置下窄模型常有整行 z = 0, 对比损失无法归一化
BIAS_JITTER = 0.1


@dataclass
class SuiteResult:
    loss_kind: str
    reports: list[GradCheckReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def max_rel_error(self) -> float:
        return max((r.max_rel_error for r in self.reports), default=0.0)


def jittered_model(dims: ModelDims, seed: int, scale: float = BIAS_JITTER) -> EncoderModel:
    """init_model 之后给全部偏置加 N(0, scale²) 抖动 (INIT 流的子流 1)"""
    model = init_model(dims, seed)
    rng = make_rng(seed, Stream.INIT, 1)
    for name, tensor in model.parameters().items():
        if name.endswith(".bias"):
            tensor.data = rng.normal(0.0, scale, size=tensor.shape)
    return model


def gradcheck_suite(config: TrainConfig, models: int = 20, h: float = 1e-5, tol: float = 1e-4) -> SuiteResult:
    """
    随机初始化若干个小模型, 对配置中的损失做全参数梯度检查

    第 i 个模型的参数与输入分别来自 INIT / DATA 流的种子 config.seed + i;
    偏置带小幅抖动, 保证投影输出没有全零行。
    """
    spec = ChannelSpec(config.p)
    reports: list[GradCheckReport] = []
    for i in range(models):
        seed = config.seed + i
        model = jittered_model(SUITE_DIMS, seed)
        rng = make_rng(seed, Stream.DATA)
        views = rng.normal(size=(2 * SUITE_PAIRS, SUITE_DIMS.input_dim))

        if config.loss_kind == "nac":
            loss_fn = lambda: nac_loss(views, model, spec, config.denominator).loss  # noqa: E731
        elif config.loss_kind == "simclr":
            loss_fn = lambda: simclr_loss(views, model, config.temperature).loss  # noqa: E731
        else:
            model.momentum = MomentumState.from_model(model, config.momentum_decay)
            queue = np.tanh(rng.normal(size=(SUITE_QUEUE, SUITE_DIMS.code_dim)))
            loss_fn = lambda: nac_mq_loss(  # noqa: E731
                views, model, model.momentum, queue, spec, config.l2_lambda, config.denominator
            ).loss

        report = check_parameters(loss_fn, list(model.parameters().values()), h=h, tol=tol)
        logger.debug(f"模型 {i}: {report}")
        if not report.passed:
            logger.warning(f"模型 {i} 梯度检查失败: {report}")
        reports.append(report)

    result = SuiteResult(loss_kind=config.loss_kind, reports=reports)
    logger.info(f"梯度检查 {models} 个模型 ({config.loss_kind}): 最大相对误差 {result.max_rel_error:.3e}")
    return result
