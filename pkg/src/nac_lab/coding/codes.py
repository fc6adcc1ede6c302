"""激活编码与 Hamming 几何"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import DomainError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ActivationCode:
    """长度 D 的 ±1 编码"""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits)
        if bits.ndim != 1:
            raise ShapeError(f"编码必须是一维向量, 实际形状 {bits.shape}")
        if not np.all((bits == 1) | (bits == -1)):
            raise DomainError("编码的每个元素必须恰好为 -1 或 +1")
        bits = bits.astype(np.int8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def D(self) -> int:
        return int(self.bits.shape[0])

    def __len__(self) -> int:
        return self.D

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ActivationCode) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        return f"ActivationCode({self.to_bitstring()})"

    def dot(self, other: "ActivationCode") -> int:
        _check_lengths(self, other)
        return int(np.dot(self.bits.astype(np.int64), other.bits.astype(np.int64)))

    def to_bitstring(self) -> str:
        """+1 → '1', −1 → '0'"""
        return "".join("1" if b > 0 else "0" for b in self.bits)

    @classmethod
    def from_bitstring(cls, text: str) -> "ActivationCode":
        if not text or any(ch not in "01" for ch in text):
            raise DomainError(f"非法比特串: {text!r}")
        return cls(np.array([1 if ch == "1" else -1 for ch in text], dtype=np.int8))


CodeLike = Union[ActivationCode, np.ndarray, Sequence[int]]


def as_bits(code: CodeLike) -> np.ndarray:
    if isinstance(code, ActivationCode):
        return code.bits
    return ActivationCode(np.asarray(code)).bits


def as_code_matrix(codes: Union[np.ndarray, Sequence[CodeLike]]) -> np.ndarray:
    """把编码列表或矩阵统一为 (N, D) 的 int8 矩阵并检查取值"""
    if isinstance(codes, np.ndarray):
        matrix = codes
    else:
        rows = [as_bits(c) for c in codes]
        if not rows:
            raise ShapeError("编码列表为空")
        if len({len(r) for r in rows}) != 1:
            raise ShapeError("编码长度不一致")
        matrix = np.stack(rows)
    if matrix.ndim != 2:
        raise ShapeError(f"编码矩阵必须是二维, 实际形状 {matrix.shape}")
    if not np.all((matrix == 1) | (matrix == -1)):
        raise DomainError("编码矩阵的元素必须为 ±1")
    return matrix.astype(np.int8)


def _check_lengths(a: ActivationCode, b: ActivationCode) -> None:
    if a.D != b.D:
        raise ShapeError(f"编码长度不一致: {a.D} vs {b.D}")


def sign_codes(a: np.ndarray) -> np.ndarray:
    """逐元素符号, a >= 0 → +1 (0 归为 +1)"""
    a = np.asarray(a, dtype=np.float64)
    if np.any(np.isnan(a)):
        raise DomainError("sign_code 的输入含 NaN")
    return np.where(a >= 0, 1, -1).astype(np.int8)


def sign_code(a: Union[np.ndarray, Sequence[float]]) -> ActivationCode:
    row = np.asarray(a, dtype=np.float64)
    if row.ndim != 1:
        raise ShapeError(f"sign_code 需要一维预激活, 实际形状 {row.shape}")
    return ActivationCode(sign_codes(row))


def hamming(ci: CodeLike, cj: CodeLike) -> int:
    """d_H = (D − c_i·c_j) / 2"""
    a, b = as_bits(ci), as_bits(cj)
    if a.shape != b.shape:
        raise ShapeError(f"编码长度不一致: {a.shape[0]} vs {b.shape[0]}")
    dot = int(np.dot(a.astype(np.int64), b.astype(np.int64)))
    return (a.shape[0] - dot) // 2


def hamming_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """两组编码间的成对 Hamming 距离, 形状 (len(A), len(B))"""
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"编码长度不一致: {A.shape[1]} vs {B.shape[1]}")
    dots = A.astype(np.int64) @ B.astype(np.int64).T
    return (A.shape[1] - dots) // 2


def avg_hamming(codes: Union[np.ndarray, Sequence[CodeLike]]) -> float:
    """所有有序不同对 (i ≠ j) 的平均 Hamming 距离"""
    matrix = as_code_matrix(codes)
    n = matrix.shape[0]
    if n < 2:
        raise DomainError(f"平均 Hamming 距离至少需要 2 个编码, 实际 {n} 个")
    # 对角线距离为 0, 直接全体求和
    return float(hamming_matrix(matrix, matrix).sum()) / (n * (n - 1))
