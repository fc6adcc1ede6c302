"""训练目标

所有损失都是目标函数取负 (最小化约定)。批数据为 2K 行, 第 2k 与 2k+1 行是同一样本的两个增强视图。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..autodiff import Tensor, constant, forward
from ..coding.channel import ChannelSpec
from ..config import DENOMINATORS
from ..errors import DomainError, ShapeError
from ..model.momentum import MomentumState
from ..model.network import Pathway, as_tensor

logger = logging.getLogger(__name__)

# 对角线屏蔽值, exp 后精确为 0
_MASK_VALUE = -1e9


@dataclass
class LossBreakdown:
    """
    损失分解

    total = −(variational_term + subsample_term) + l2_weight · l2_penalty
    """

    total: float
    variational_term: float
    subsample_term: float
    l2_penalty: float = 0.0
    l2_weight: float = 0.0
    loss: Optional[Tensor] = field(default=None, repr=False, compare=False)
    aux: dict = field(default_factory=dict, repr=False, compare=False)

    def as_row(self) -> dict[str, float]:
        return {
            "total": self.total,
            "variational": self.variational_term,
            "subsample": self.subsample_term,
            "l2": self.l2_penalty,
        }


def pair_swap_matrix(n: int) -> np.ndarray:
    """交换配对行 (2k ↔ 2k+1) 的置换矩阵"""
    if n % 2:
        raise ShapeError(f"视图行数必须为偶数, 实际 {n}")
    perm = np.zeros((n, n))
    idx = np.arange(n)
    perm[idx, idx ^ 1] = 1.0
    return perm


def swap_pairs(x: Tensor) -> Tensor:
    """第 2k 行取第 2k+1 行的值, 反之亦然 (可求导)"""
    return forward("matmul", [constant(pair_swap_matrix(x.shape[0])), x])


def _check_views(x: Union[np.ndarray, Tensor]) -> Tensor:
    x = as_tensor(x)
    if x.data.ndim != 2:
        raise ShapeError(f"视图批次必须是二维, 实际形状 {x.shape}")
    if x.shape[0] % 2 or x.shape[0] == 0:
        raise ShapeError(f"视图批次需要 2K 行成对排列, 实际 {x.shape[0]} 行")
    return x


# ---------------------------------------------------------------- 逐行项


def variational_rows(z_tilde: Tensor, r: Tensor) -> Tensor:
    """
    ln Q(z̃ | r) 的逐行值: ½·[z̃·r − Σ_d (softplus(r_d) + softplus(−r_d))]

    利用 ln σ(r)(1−σ(r)) = −softplus(r) − softplus(−r) 保持数值稳定。
    """
    if z_tilde.shape != r.shape or z_tilde.data.ndim != 2:
        raise ShapeError(f"variational_term 形状不匹配: z̃{z_tilde.shape} vs r{r.shape}")
    log_var = forward(
        "sum",
        [forward("add", [forward("softplus", [r]), forward("softplus", [forward("negate", [r])])])],
        {"axis": 1},
    )
    inner = forward("add", [forward("rowdot", [z_tilde, r]), forward("negate", [log_var])])
    return forward("scale", [inner], {"value": 0.5})


def _check_bank(z_tilde: Tensor, bank: Tensor, spec: ChannelSpec) -> None:
    if spec.p == 0.0:
        raise DomainError("subsample_term 要求 p ∈ (0, 0.5)")
    if bank.data.ndim != 2 or bank.shape[0] == 0:
        raise ShapeError("subsample_term 的编码银行为空")
    if bank.shape[1] != z_tilde.shape[1]:
        raise ShapeError(f"subsample_term 维度不匹配: z̃{z_tilde.shape} vs bank{bank.shape}")


def subsample_rows(z_tilde: Tensor, bank: Tensor, spec: ChannelSpec) -> Tensor:
    """
    逐行 −ln[(1/M)·Σ_k exp((z̃·z_k)·½L)], 银行 M 行 (包含正样本自身)
    """
    _check_bank(z_tilde, bank, spec)
    logits = forward(
        "scale",
        [forward("matmul", [z_tilde, bank], {"transpose_b": True})],
        {"value": spec.half_scale},
    )
    lse = forward("logsumexp", [logits], {"axis": 1})
    return forward("scale", [lse], {"value": -1.0}) + constant(np.full(z_tilde.shape[0], math.log(bank.shape[0])))


def soft_subsample_rows(z_tilde: Tensor, bank: Tensor, spec: ChannelSpec) -> Tensor:
    """
    逐行 −ln[(1/M)·Σ_k Π_d (1 + (1−2p)·z̃_d·z_kd) / 2]

    松弛编码按比特均值理解: 码字 z_k 经信道后第 d 位取 z̃_d 的概率。
    ±1 编码上与 subsample_rows 只差常数 (D/2)·ln p(1−p); z̃ = 0 时为 D·ln 2,
    与变分项在 r = 0 处的 −D·ln 2 抵消, 全零编码的目标值为 0。
    """
    _check_bank(z_tilde, bank, spec)
    if np.max(np.abs(z_tilde.data)) > 1.0 or np.max(np.abs(bank.data)) > 1.0:
        raise DomainError("soft 分母要求编码分量在 [-1, 1] 内")
    rows, dim = z_tilde.shape
    size = bank.shape[0]
    contrast = 1.0 - 2.0 * spec.p
    ones = constant(np.ones((rows, size)))
    basis = np.eye(dim)

    log_lik: Optional[Tensor] = None
    for d in range(dim):
        pick = constant(basis[:, d : d + 1])
        column = forward("matmul", [z_tilde, pick])
        bank_column = forward("matmul", [bank, pick])
        agreement = forward("matmul", [column, bank_column], {"transpose_b": True})
        term = forward("log", [forward("add", [forward("scale", [agreement], {"value": contrast}), ones])])
        log_lik = term if log_lik is None else forward("add", [log_lik, term])

    lse = forward("logsumexp", [log_lik], {"axis": 1})
    offset = dim * math.log(2.0) + math.log(size)
    return forward("scale", [lse], {"value": -1.0}) + constant(np.full(rows, offset))


def bank_rows(z_tilde: Tensor, bank: Tensor, spec: ChannelSpec, denominator: str = "soft") -> Tensor:
    """按 denominator 选择分母银行的逐行子采样项"""
    if denominator == "soft":
        return soft_subsample_rows(z_tilde, bank, spec)
    if denominator == "linear":
        return subsample_rows(z_tilde, bank, spec)
    raise DomainError(f"denominator 必须是 {'/'.join(DENOMINATORS)} 之一, 实际 {denominator!r}")


# ---------------------------------------------------------------- 标量项


def variational_term(z_tilde: Union[np.ndarray, Tensor], r: Union[np.ndarray, Tensor]) -> Tensor:
    """变分项: 逐行 ln Q 的批均值"""
    return forward("mean", [variational_rows(as_tensor(z_tilde), as_tensor(r))])


def subsample_term(
    z_tilde: Union[np.ndarray, Tensor],
    bank: Union[np.ndarray, Tensor],
    spec: ChannelSpec,
) -> Tensor:
    """子采样项; z̃ 可以是单行 (D,) 或多行 (B, D), 多行时取均值"""
    z = as_tensor(z_tilde)
    if z.data.ndim == 1:
        z = Tensor(z.data[None, :])
    return forward("mean", [subsample_rows(z, as_tensor(bank), spec)])


def soft_subsample_term(
    z_tilde: Union[np.ndarray, Tensor],
    bank: Union[np.ndarray, Tensor],
    spec: ChannelSpec,
) -> Tensor:
    z = as_tensor(z_tilde)
    if z.data.ndim == 1:
        z = Tensor(z.data[None, :])
    return forward("mean", [soft_subsample_rows(z, as_tensor(bank), spec)])


def discrete_objective_rows(
    noisy: np.ndarray,
    codes: np.ndarray,
    logits: np.ndarray,
    spec: ChannelSpec,
) -> np.ndarray:
    """
    离散编码上的逐行目标, 分母恢复信道归一化常数 (D/2)·ln p(1−p)

    logits 取最优值 L·c 时, 每行恰为 ln P(c̃|c) − ln P(c̃)。

    Args:
        noisy: (M, D) 信道输出 c̃
        codes: (N, D) 全部码字 (完整编码银行)
        logits: (M, D) 对应每行 c̃ 的推断 logits
    """
    noisy_t = Tensor(noisy.astype(np.float64))
    var = variational_rows(noisy_t, Tensor(logits))
    sub = subsample_rows(noisy_t, Tensor(codes.astype(np.float64)), spec)
    return var.data + sub.data - spec.log_normalizer(codes.shape[1])


# ---------------------------------------------------------------- 完整损失


def nac_loss(
    views: Union[np.ndarray, Tensor],
    model: Pathway,
    spec: ChannelSpec,
    denominator: str = "soft",
) -> LossBreakdown:
    """
    NAC 损失 (tanh 松弛)

    推断头在一条通路的表示上预测另一条通路的编码: h_{2k} 的 logits 用于 z̃_{2k+1}, 反之亦然。
    分母银行为批内全部 2K 个编码, 似然形式由 denominator 决定 (见 DENOMINATORS)。
    """
    x = _check_views(views)
    encoded = model.encode(x)
    r = swap_pairs(model.infer_logits(encoded.h))

    var = variational_term(encoded.z, r)
    sub = forward("mean", [bank_rows(encoded.z, encoded.z, spec, denominator)])
    objective = forward("add", [var, sub])
    loss = forward("negate", [objective])

    return LossBreakdown(
        total=loss.item(),
        variational_term=var.item(),
        subsample_term=sub.item(),
        loss=loss,
        aux={"a": encoded.a.data, "z": encoded.z.data},
    )


def nac_mq_loss(
    views: Union[np.ndarray, Tensor],
    model: Pathway,
    momentum: MomentumState,
    queue: np.ndarray,
    spec: ChannelSpec,
    lam: float = 0.1,
    denominator: str = "soft",
) -> LossBreakdown:
    """
    动量队列版 NAC 损失

    r̂ 由在线推断头作用于动量编码器对另一通路的表示得到; 分母银行为队列特征;
    λ‖z‖² 按行取均值。动量参数与队列不接收梯度。
    """
    if lam < 0:
        raise DomainError(f"λ={lam} 不能为负数")
    queue = np.asarray(queue, dtype=np.float64)
    if queue.ndim != 2 or queue.shape[0] == 0:
        raise ShapeError("动量队列为空")

    x = _check_views(views)
    encoded = model.encode(x)
    slow = momentum.encode(constant(x.data))
    r_hat = swap_pairs(model.infer_logits(constant(slow.h.data)))

    var = variational_term(encoded.z, r_hat)
    sub = forward("mean", [bank_rows(encoded.z, constant(queue), spec, denominator)])
    l2 = forward("mean", [forward("l2sq", [encoded.z], {"axis": 1})])
    objective = forward("add", [var, sub])
    loss = forward("add", [forward("negate", [objective]), forward("scale", [l2], {"value": lam})])

    return LossBreakdown(
        total=loss.item(),
        variational_term=var.item(),
        subsample_term=sub.item(),
        l2_penalty=l2.item(),
        l2_weight=lam,
        loss=loss,
        aux={"a": encoded.a.data, "z": encoded.z.data, "momentum_z": slow.z.data.copy()},
    )


def normalize_rows(z: Tensor) -> Tensor:
    """u = z / ‖z‖, 零范数行报错"""
    squares = forward("square", [z])
    norm_sq = forward("matmul", [squares, constant(np.ones((z.shape[1], 1)))])
    if np.any(norm_sq.data <= 0):
        raise DomainError("存在零范数特征行, 无法归一化")
    inv_norm = forward("exp", [forward("scale", [forward("log", [norm_sq])], {"value": -0.5})])
    return forward("mul", [z, inv_norm])


def contrastive_logits(z: Tensor, tau: float) -> Tensor:
    """归一化特征的相似度 / τ, 对角线被屏蔽"""
    if tau <= 0:
        raise DomainError(f"温度 τ={tau} 必须大于 0")
    u = normalize_rows(z)
    sim = forward("scale", [forward("matmul", [u, u], {"transpose_b": True})], {"value": 1.0 / tau})
    return forward("add", [sim, constant(np.eye(z.shape[0]) * _MASK_VALUE)])


def simclr_terms(z: Tensor, tau: float) -> tuple[Tensor, Tensor, Tensor]:
    """由 2K 行特征计算 (损失, 正样本 logit 均值, −logsumexp 均值)"""
    z = _check_views(z)
    logits = contrastive_logits(z, tau)
    positive = forward("rowdot", [logits, constant(pair_swap_matrix(z.shape[0]))])
    lse = forward("logsumexp", [logits], {"axis": 1})
    pos_mean = forward("mean", [positive])
    neg_mean = forward("mean", [forward("negate", [lse])])
    loss = forward("negate", [forward("add", [pos_mean, neg_mean])])
    return loss, pos_mean, neg_mean


def simclr_loss(views: Union[np.ndarray, Tensor], model: Pathway, tau: float = 0.5) -> LossBreakdown:
    """
    对比学习基线: 归一化温度交叉熵, 在两个方向上取平均

    分解约定: variational_term 记录正样本对 logit 的均值,
    subsample_term 记录 −logsumexp(负样本与正样本) 的均值。
    """
    x = _check_views(views)
    encoded = model.encode(x)
    loss, pos_mean, neg_mean = simclr_terms(encoded.z, tau)

    return LossBreakdown(
        total=loss.item(),
        variational_term=pos_mean.item(),
        subsample_term=neg_mean.item(),
        loss=loss,
        aux={"a": encoded.a.data, "z": encoded.z.data},
    )
