"""小规模精确互信息与 Hamming 距离上界

互信息单位为 nats。精确计算枚举全部 2^D 个信道输出, 只支持 D <= 16。
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..coding.channel import ChannelSpec, log_cond_table, transmit_rows
from ..coding.codes import CodeLike, as_code_matrix, avg_hamming
from ..errors import DomainError, EnumerationLimitError
from ..training.objective import discrete_objective_rows
from ..utils import Stream, make_rng

logger = logging.getLogger(__name__)

MAX_ENUM_DIM = 16
_CHUNK = 4096


@dataclass(frozen=True)
class Codebook:
    """N 个等概率码字"""

    codes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", as_code_matrix(self.codes))

    @classmethod
    def of(cls, codes: Union["Codebook", np.ndarray, Sequence[CodeLike]]) -> "Codebook":
        return codes if isinstance(codes, Codebook) else cls(codes)

    @property
    def N(self) -> int:
        return int(self.codes.shape[0])

    @property
    def D(self) -> int:
        return int(self.codes.shape[1])


@dataclass
class MiEstimate:
    value: float
    stderr: float
    samples: int

    def __str__(self) -> str:
        return f"{self.value:.6g} ± {self.stderr:.2g} (n={self.samples})"


@dataclass
class BoundCheck:
    lhs: float  # 精确互信息
    rhs: float  # (N−1)/N·(1−2p)·L·d̄_H
    holds: bool
    avg_hamming: float


def all_messages(D: int) -> np.ndarray:
    """全部 2^D 个 ±1 向量, 第 m 行对应整数 m 的二进制 (高位在前)"""
    if D > MAX_ENUM_DIM:
        raise EnumerationLimitError(f"D={D} 超过枚举上限 {MAX_ENUM_DIM}, 请改用 mc_mi_bound 的蒙特卡洛估计")
    ints = np.arange(2**D, dtype=np.int64)[:, None]
    bits = (ints >> np.arange(D - 1, -1, -1)) & 1
    return np.where(bits == 1, 1, -1).astype(np.int8)


def exact_mi(book: Union[Codebook, np.ndarray, Sequence[CodeLike]], spec: ChannelSpec) -> float:
    """
    I = (1/N)·Σ_i Σ_c̃ P(c̃|c_i)·ln[P(c̃|c_i) / P(c̃)]

    Args:
        book: 码字集合, 均匀先验
        spec: 信道, 要求 p ∈ (0, 0.5)

    Returns:
        非负的互信息 (nats)
    """
    book = Codebook.of(book)
    if book.D > MAX_ENUM_DIM:
        raise EnumerationLimitError(
            f"D={book.D} 超过枚举上限 {MAX_ENUM_DIM}, 请改用 mc_mi_bound 的蒙特卡洛估计"
        )
    spec.require_noisy()
    log_n = math.log(book.N)
    messages = all_messages(book.D)

    total = 0.0
    for start in range(0, messages.shape[0], _CHUNK):
        table = log_cond_table(messages[start : start + _CHUNK], book.codes, spec)
        log_marginal = np.logaddexp.reduce(table, axis=1) - log_n
        total += float(np.sum(np.exp(table) * (table - log_marginal[:, None])))
    return max(0.0, total / book.N)


def optimal_logits(codes: np.ndarray, spec: ChannelSpec) -> np.ndarray:
    """最优推断 logits r = L·c"""
    return codes.astype(np.float64) * spec.scale


def mc_mi_bound(
    book: Union[Codebook, np.ndarray, Sequence[CodeLike]],
    spec: ChannelSpec,
    samples: int = 100_000,
    logits: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0,
) -> MiEstimate:
    """
    完整编码银行下离散目标的蒙特卡洛估计

    Args:
        book: 码字集合
        spec: 信道
        samples: 采样数, 至少 1000
        logits: 每个码字对应的推断 logits (N, D); 默认取最优值 L·c
        rng: 信道随机流; 默认 make_rng(seed, Stream.EVAL)

    Returns:
        MiEstimate(均值, 标准误, 采样数)
    """
    book = Codebook.of(book)
    if samples < 1000:
        raise DomainError(f"采样数必须 >= 1000, 实际 {samples}")
    if book.N == 1:
        return MiEstimate(value=0.0, stderr=0.0, samples=samples)
    spec.require_noisy()
    if logits is None:
        logits = optimal_logits(book.codes, spec)
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != book.codes.shape:
        raise DomainError(f"logits 形状 {logits.shape} 与码本 {book.codes.shape} 不一致")

    rng = rng if rng is not None else make_rng(seed, Stream.EVAL)
    values = np.empty(samples)
    for start in range(0, samples, _CHUNK):
        count = min(_CHUNK, samples - start)
        chosen = rng.integers(0, book.N, size=count)
        noisy = transmit_rows(book.codes[chosen], spec, rng)
        values[start : start + count] = discrete_objective_rows(noisy, book.codes, logits[chosen], spec)

    return MiEstimate(
        value=float(np.mean(values)),
        stderr=float(np.std(values, ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


def hamming_bound_rhs(book: Codebook, spec: ChannelSpec) -> tuple[float, float]:
    """返回 (上界, d̄_H)"""
    d_bar = avg_hamming(book.codes)
    rhs = (book.N - 1) / book.N * (1.0 - 2.0 * spec.p) * spec.scale * d_bar
    return rhs, d_bar


def hamming_bound_check(
    book: Union[Codebook, np.ndarray, Sequence[CodeLike]],
    spec: ChannelSpec,
    slack: float = 1e-9,
) -> BoundCheck:
    """检查 I ≤ (N−1)/N·(1−2p)·ln((1−p)/p)·d̄_H, 附加常数取 0"""
    book = Codebook.of(book)
    if book.N < 2:
        raise DomainError(f"上界检查至少需要 2 个码字, 实际 {book.N}")
    lhs = exact_mi(book, spec)
    rhs, d_bar = hamming_bound_rhs(book, spec)
    holds = lhs <= rhs + slack
    if not holds:
        logger.warning(f"Hamming 上界不成立: lhs={lhs:.6g} > rhs={rhs:.6g}")
    return BoundCheck(lhs=lhs, rhs=rhs, holds=holds, avg_hamming=d_bar)


def random_codebook(rng: np.random.Generator, n: int, d: int) -> Codebook:
    return Codebook(np.where(rng.random((n, d)) < 0.5, 1, -1))
