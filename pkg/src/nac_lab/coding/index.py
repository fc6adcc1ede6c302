"""Hamming 哈希索引与检索评估"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from ..errors import DataFormatError, DomainError, ShapeError
from .codes import ActivationCode, CodeLike, as_bits, as_code_matrix, hamming_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IndexEntry:
    id: int
    code: ActivationCode
    label: int


class HashIndex:
    """
    编码表

    构建后不可变; 排序规则为 (Hamming 距离, id) 升序, 是确定的全序。
    """

    def __init__(self, entries: Sequence[IndexEntry]):
        if not entries:
            raise ShapeError("哈希索引不能为空")
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise DomainError("哈希索引的 id 必须唯一")
        lengths = {e.code.D for e in entries}
        if len(lengths) != 1:
            raise ShapeError(f"哈希索引中的编码长度不一致: {sorted(lengths)}")

        self._entries = tuple(entries)
        self._ids = np.array(ids, dtype=np.int64)
        self._labels = np.array([e.label for e in entries], dtype=np.int64)
        self._codes = np.stack([e.code.bits for e in entries])
        self._codes.setflags(write=False)

    @classmethod
    def from_codes(
        cls,
        ids: Sequence[int],
        codes: np.ndarray,
        labels: Sequence[int],
    ) -> "HashIndex":
        matrix = as_code_matrix(codes)
        if not (len(ids) == len(labels) == matrix.shape[0]):
            raise ShapeError(f"ids/codes/labels 行数不一致: {len(ids)}/{matrix.shape[0]}/{len(labels)}")
        return cls(
            [
                IndexEntry(id=int(i), code=ActivationCode(row), label=int(label))
                for i, row, label in zip(ids, matrix, labels)
            ]
        )

    @property
    def D(self) -> int:
        return int(self._codes.shape[1])

    @property
    def entries(self) -> tuple[IndexEntry, ...]:
        return self._entries

    @property
    def codes(self) -> np.ndarray:
        return self._codes

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    def __len__(self) -> int:
        return len(self._entries)

    def _check_query(self, bits: np.ndarray) -> None:
        if bits.shape[0] != self.D:
            raise ShapeError(f"查询编码长度 {bits.shape[0]} 与索引长度 {self.D} 不一致")

    def ranking(self, code: CodeLike) -> np.ndarray:
        """全部条目的位置下标, 按 (距离, id) 排序"""
        bits = as_bits(code)
        self._check_query(bits)
        distances = hamming_matrix(bits[None, :], self._codes)[0]
        return np.lexsort((self._ids, distances))

    def query(self, code: CodeLike, k: int) -> list[int]:
        """返回距离最近的 k 个 id; k 超过条目数时返回全部"""
        if k < 1:
            raise DomainError(f"k 必须 >= 1, 实际 {k}")
        order = self.ranking(code)[:k]
        return [int(i) for i in self._ids[order]]

    def export_csv(self, path: Union[str, Path]) -> Path:
        """每行 id,label,bitstring (无表头)"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(
            {
                "id": [e.id for e in self._entries],
                "label": [e.label for e in self._entries],
                "bits": [e.code.to_bitstring() for e in self._entries],
            }
        )
        frame.to_csv(path, header=False, index=False, lineterminator="\n", encoding="utf-8")
        return path

    @classmethod
    def import_csv(cls, path: Union[str, Path]) -> "HashIndex":
        path = Path(path)
        try:
            frame = pd.read_csv(
                path,
                header=None,
                dtype=str,
                keep_default_na=False,
                index_col=False,
            )
        except pd.errors.EmptyDataError as e:
            raise DataFormatError(f"编码文件为空: {path}") from e
        except pd.errors.ParserError as e:
            match = re.search(r"line (\d+)", str(e))
            raise DataFormatError(
                f"列数不一致: {path}", line=int(match.group(1)) if match else None
            ) from e

        if frame.empty:
            raise DataFormatError(f"编码文件为空: {path}")
        if frame.shape[1] != 3:
            raise DataFormatError(f"编码文件应为 id,label,bitstring 三列, 实际 {frame.shape[1]} 列", line=1)

        entries = []
        for row_number, (raw_id, raw_label, bits) in enumerate(frame.itertuples(index=False), start=1):
            if any(pd.isna(v) for v in (raw_id, raw_label, bits)):
                raise DataFormatError("缺少字段", line=row_number)
            try:
                entry = IndexEntry(
                    id=int(raw_id),
                    code=ActivationCode.from_bitstring(bits.strip()),
                    label=int(raw_label),
                )
            except ValueError as e:
                raise DataFormatError(f"无法解析编码行 {raw_id!r},{raw_label!r},{bits!r}: {e}", line=row_number) from e
            entries.append(entry)
        logger.debug(f"已导入 {len(entries)} 个编码: {path}")
        return cls(entries)


@dataclass
class RetrievalReport:
    """检索结果"""

    mean_ap: float
    queries: int
    skipped: int = 0
    per_query: list[float] = field(default_factory=list, repr=False)


def average_precision(relevance: np.ndarray) -> float:
    """
    在完整排序列表上计算 AP

    Args:
        relevance: 按排序顺序排列的相关性布尔数组

    Returns:
        每个相关位置 r 上 precision@r 的平均; 无相关项时为 nan
    """
    relevance = np.asarray(relevance, dtype=bool)
    hits = np.cumsum(relevance)
    ranks = np.flatnonzero(relevance) + 1
    if ranks.size == 0:
        return float("nan")
    return float(np.mean(hits[ranks - 1] / ranks))


def mean_average_precision(
    index: HashIndex,
    queries: Sequence[tuple[CodeLike, int]],
) -> RetrievalReport:
    """
    检索 mAP, 相关性为"与查询同类"

    类别不在索引中的查询被跳过并计入 skipped。
    """
    present = set(int(label) for label in index.labels)
    scores: list[float] = []
    skipped = 0

    for code, label in queries:
        if int(label) not in present:
            skipped += 1
            continue
        order = index.ranking(code)
        scores.append(average_precision(index.labels[order] == int(label)))

    if skipped:
        logger.warning(f"{skipped} 个查询的类别不在索引中, 已跳过")
    mean_ap = float(np.mean(scores)) if scores else 0.0
    return RetrievalReport(mean_ap=mean_ap, queries=len(scores), skipped=skipped, per_query=scores)
