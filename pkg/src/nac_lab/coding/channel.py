"""二进制对称信道

每个比特独立地以概率 p 翻转; 所有对数均为自然对数, 互信息单位为 nats。
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import DomainError, ShapeError
from .codes import ActivationCode, CodeLike, as_bits, as_code_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelSpec:
    """翻转概率 p ∈ [0, 0.5)"""

    p: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p < 0.5) or math.isnan(self.p):
            raise DomainError(f"翻转概率 p={self.p} 不在 [0, 0.5) 内")

    @property
    def scale(self) -> float:
        """L = ln((1−p)/p); p = 0 时为 +inf"""
        if self.p == 0.0:
            return math.inf
        return math.log((1.0 - self.p) / self.p)

    @property
    def half_scale(self) -> float:
        return 0.5 * self.scale

    def require_noisy(self) -> None:
        if self.p == 0.0:
            raise DomainError("该量要求 p > 0 (p = 0 时对数概率为 -inf)")

    def log_normalizer(self, D: int) -> float:
        """(D/2)·ln(p(1−p))"""
        self.require_noisy()
        return 0.5 * D * math.log(self.p * (1.0 - self.p))


def binary_entropy(p: float) -> float:
    """H_b(p), nats"""
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def transmit_rows(codes: np.ndarray, spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    """逐行通过信道; 输入 (N, D) 的 ±1 矩阵"""
    matrix = as_code_matrix(codes)
    flips = rng.random(matrix.shape) < spec.p
    return np.where(flips, -matrix, matrix).astype(np.int8)


def transmit(
    c: CodeLike,
    spec: ChannelSpec,
    rng: np.random.Generator,
) -> Union[ActivationCode, np.ndarray]:
    """
    通过二进制对称信道发送编码

    Args:
        c: ActivationCode 或 (N, D) 编码矩阵
        spec: 信道参数
        rng: 信道随机流 (Stream.CHANNEL)

    Returns:
        与输入同类型的带噪编码; p = 0 时与输入相同
    """
    if isinstance(c, np.ndarray) and c.ndim == 2:
        return transmit_rows(c, spec, rng)
    bits = as_bits(c)
    return ActivationCode(transmit_rows(bits[None, :], spec, rng)[0])


def log_cond_prob(noisy: CodeLike, c: CodeLike, spec: ChannelSpec) -> float:
    """
    ln P(c̃ | c) = (c̃·c)·½L + (D/2)·ln(p(1−p))

    等于 ln(p^{d_H}·(1−p)^{D−d_H})。p = 0 且两码不同时概率为 0, 报定义域错误。
    """
    a, b = as_bits(noisy), as_bits(c)
    if a.shape != b.shape:
        raise ShapeError(f"编码长度不一致: {a.shape[0]} vs {b.shape[0]}")
    if spec.p == 0.0:
        if np.array_equal(a, b):
            return 0.0
        raise DomainError("p = 0 时不同编码的条件概率为 0, 对数为 -inf")
    dot = float(np.dot(a.astype(np.int64), b.astype(np.int64)))
    return dot * spec.half_scale + spec.log_normalizer(a.shape[0])


def log_cond_table(noisy: np.ndarray, codes: np.ndarray, spec: ChannelSpec) -> np.ndarray:
    """批量 ln P(c̃_m | c_n), 形状 (M, N); 要求 p > 0"""
    spec.require_noisy()
    if noisy.shape[1] != codes.shape[1]:
        raise ShapeError(f"编码长度不一致: {noisy.shape[1]} vs {codes.shape[1]}")
    dots = noisy.astype(np.float64) @ codes.astype(np.float64).T
    return dots * spec.half_scale + spec.log_normalizer(codes.shape[1])


def expected_noisy_dot(ci: CodeLike, cj: CodeLike, spec: ChannelSpec) -> float:
    """E[c̃_i · c_j] = (1 − 2p)·(c_i · c_j)"""
    a, b = as_bits(ci), as_bits(cj)
    if a.shape != b.shape:
        raise ShapeError(f"编码长度不一致: {a.shape[0]} vs {b.shape[0]}")
    return (1.0 - 2.0 * spec.p) * float(np.dot(a.astype(np.int64), b.astype(np.int64)))
