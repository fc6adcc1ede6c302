"""合成数据集与 CSV 读写"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from sklearn.datasets import make_blobs, make_moons
from sklearn.model_selection import train_test_split

from ..errors import DataFormatError, DomainError, ShapeError
from ..utils import Stream, make_rng

logger = logging.getLogger(__name__)

KINDS = ("moons", "blobs", "rings")


@dataclass
class Dataset:
    """特征矩阵 + 类别标签"""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    split: Optional[np.ndarray] = field(default=None, repr=False)  # 每行的划分标签

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeError(f"特征必须是二维矩阵, 实际形状 {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError(f"标签数 {self.labels.shape} 与行数 {self.features.shape[0]} 不一致")
        if self.labels.size and self.labels.min() < 0:
            raise DomainError("标签必须为非负整数")

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def subset(self, rows: np.ndarray, tag: Optional[str] = None) -> "Dataset":
        split = None if tag is None else np.full(len(rows), tag)
        return Dataset(self.features[rows], self.labels[rows], name=self.name, split=split)

    def bbox(self, inflate: float = 0.1) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax), 每边外扩 inflate 比例"""
        if self.dim != 2:
            raise ShapeError(f"包围盒只对二维数据定义, 实际维度 {self.dim}")
        lo, hi = self.features.min(axis=0), self.features.max(axis=0)
        pad = (hi - lo) * inflate / 2.0
        pad = np.where(pad > 0, pad, 0.5)
        return float(lo[0] - pad[0]), float(hi[0] + pad[0]), float(lo[1] - pad[1]), float(hi[1] + pad[1])


def _sklearn_seed(seed: int) -> int:
    # sklearn 只接受 int / RandomState, 从命名流派生
    return int(make_rng(seed, Stream.DATA).integers(0, 2**31 - 1))


def _rings(n: int, noise: float, classes: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    counts = [n // classes + (1 if c < n % classes else 0) for c in range(classes)]
    labels = np.repeat(np.arange(classes), counts)
    radius = (labels + 1).astype(np.float64) + rng.normal(0.0, noise, size=n)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    points = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    order = rng.permutation(n)
    return points[order], labels[order]


def synth(kind: str, n: int, noise: float, classes: int = 2, seed: int = 0) -> Dataset:
    """
    生成玩具数据集

    Args:
        kind: moons (两个交错半圆) / blobs (各向同性高斯簇) / rings (同心圆环)
        n: 样本数, 至少 8·classes
        noise: moons/rings 的噪声标准差, blobs 的簇标准差
        classes: 类别数 (moons 固定为 2)
        seed: 随机种子

    Returns:
        Dataset, 相同参数下逐位一致
    """
    if kind not in KINDS:
        raise DomainError(f"未知数据集类型: {kind} (可选 {', '.join(KINDS)})")
    if classes < 2:
        raise DomainError(f"类别数必须 >= 2, 实际 {classes}")
    if n < 8 * classes:
        raise DomainError(f"样本数 n={n} 必须 >= 8·classes={8 * classes}")
    if noise < 0:
        raise DomainError(f"噪声不能为负数: {noise}")

    if kind == "moons":
        if classes != 2:
            raise DomainError("moons 数据集只有 2 个类别")
        x, y = make_moons(n_samples=n, noise=noise, random_state=_sklearn_seed(seed))
    elif kind == "blobs":
        angles = 2.0 * np.pi * np.arange(classes) / classes
        centers = 4.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        x, y = make_blobs(n_samples=n, centers=centers, cluster_std=noise, random_state=_sklearn_seed(seed))
    else:
        x, y = _rings(n, noise, classes, make_rng(seed, Stream.DATA))

    logger.debug(f"生成数据集 {kind}: n={n}, classes={classes}, noise={noise}, seed={seed}")
    return Dataset(features=x, labels=y, name=kind)


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """表头 f0,...,f{d-1},label; 浮点数 17 位有效数字"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=[f"f{i}" for i in range(dataset.dim)])
    frame["label"] = dataset.labels
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n", encoding="utf-8")
    return path


def load_csv(path: Union[str, Path]) -> Dataset:
    """
    读取数据集 CSV

    错误 (缺少表头、非数值单元格、列数不一致) 都带行号, 行号从表头所在的第 1 行起算。
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            index_col=False,
        )
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"数据文件为空: {path}") from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise DataFormatError(
            f"列数不一致: {path}", line=int(match.group(1)) if match else None
        ) from e

    columns = list(frame.columns)
    d = len(columns) - 1
    if d < 1 or columns != [f"f{i}" for i in range(d)] + ["label"]:
        raise DataFormatError(f"表头应为 f0,...,f{{d-1}},label, 实际 {','.join(columns)}", line=1)
    if frame.empty:
        raise DataFormatError(f"数据文件没有数据行: {path}", line=2)

    features = np.empty((len(frame), d))
    labels = np.empty(len(frame), dtype=np.int64)
    for i, row in enumerate(frame.itertuples(index=False)):
        line = i + 2
        if any(pd.isna(v) for v in row):
            raise DataFormatError(f"列数不足, 期望 {d + 1} 列", line=line)
        try:
            features[i] = [float(v) for v in row[:d]]
            label = float(row[d])
        except ValueError as e:
            raise DataFormatError(f"非数值单元格: {e}", line=line) from e
        if not np.all(np.isfinite(features[i])):
            raise DataFormatError("特征包含非有限值", line=line)
        if not math.isfinite(label) or label != int(label) or not (0 <= label < 2**31):
            raise DataFormatError(f"标签必须为非负整数, 实际 {row[d]}", line=line)
        labels[i] = int(label)

    logger.debug(f"已读取数据集 {path}: N={len(labels)}, d={d}")
    return Dataset(features=features, labels=labels, name=path.stem)


def split_dataset(
    dataset: Dataset,
    test_fraction: float,
    seed: int,
    tags: tuple[str, str] = ("train", "test"),
) -> tuple[Dataset, Dataset]:
    """按类别分层的随机划分"""
    rows = np.arange(len(dataset))
    try:
        first, second = train_test_split(
            rows,
            test_size=test_fraction,
            stratify=dataset.labels,
            random_state=int(make_rng(seed, Stream.PROBE).integers(0, 2**31 - 1)),
        )
    except ValueError as e:
        raise DomainError(f"无法分层划分数据集: {e}") from e
    return dataset.subset(np.sort(first), tags[0]), dataset.subset(np.sort(second), tags[1])
