"""线性区域分析

二维输入的区域通过网格采样激活模式识别, 得到的区域数是真实值的下界。
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ..coding.codes import sign_codes
from ..errors import DomainError, ShapeError
from ..model.network import EncoderModel, as_tensor

logger = logging.getLogger(__name__)

BBox = tuple[float, float, float, float]  # (xmin, xmax, ymin, ymax)
Segment = tuple[tuple[float, float], tuple[float, float]]

MIN_RESOLUTION = 16


def count_distinct_codes(model: EncoderModel, x: np.ndarray, layer: str = "projection") -> int:
    """
    数据集上不同激活编码的个数

    Args:
        layer: projection (投影头预激活 a) 或 last (最后一个编码器层的预激活)
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ShapeError("count_distinct_codes 需要非空数据集")
    if layer == "projection":
        codes = sign_codes(model.encode(x).a.data)
    elif layer == "last":
        _, preactivations = model.encoder(as_tensor(x))
        codes = sign_codes(preactivations[-1].data)
    else:
        raise DomainError(f"未知层: {layer} (可选 projection / last)")
    return int(np.unique(codes, axis=0).shape[0])


@dataclass
class RegionMap:
    """网格上的激活模式图"""

    bbox: BBox
    resolution: int
    cell_code: np.ndarray  # (H, W), 行 0 对应 ymin
    code_table: np.ndarray  # (区域数, 隐藏单元总数), ±1
    boundaries: list[Segment] = field(default_factory=list)
    points: Optional[np.ndarray] = field(default=None, repr=False)
    point_labels: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def distinct(self) -> int:
        return int(self.code_table.shape[0])

    @property
    def cell_size(self) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.bbox
        return (xmax - xmin) / self.resolution, (ymax - ymin) / self.resolution

    def cell_points(self) -> np.ndarray:
        return grid_points(self.bbox, self.resolution)


def grid_points(bbox: BBox, resolution: int) -> np.ndarray:
    """
    每个格子的采样点 (左下角), 按行优先顺序 (y 外层, x 内层)

    分辨率翻倍时新采样点集合包含原集合, 因此不同模式数随之单调不减。
    """
    xmin, xmax, ymin, ymax = bbox
    xs = xmin + np.arange(resolution) * (xmax - xmin) / resolution
    ys = ymin + np.arange(resolution) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def _boundary_segments(cells: np.ndarray, bbox: BBox) -> list[Segment]:
    """相邻且模式不同的格子之间插入边界, 同一直线上的连续边合并"""
    xmin, xmax, ymin, ymax = bbox
    h, w = cells.shape
    dx, dy = (xmax - xmin) / w, (ymax - ymin) / h
    segments: list[Segment] = []

    vertical = cells[:, 1:] != cells[:, :-1]  # (H, W-1): 第 j 与 j+1 列之间
    for j in range(w - 1):
        x = xmin + (j + 1) * dx
        for start, stop in true_runs(vertical[:, j]):
            segments.append(((x, ymin + start * dy), (x, ymin + stop * dy)))

    horizontal = cells[1:, :] != cells[:-1, :]  # (H-1, W): 第 i 与 i+1 行之间
    for i in range(h - 1):
        y = ymin + (i + 1) * dy
        for start, stop in true_runs(horizontal[i, :]):
            segments.append(((xmin + start * dx, y), (xmin + stop * dx, y)))
    return segments


def true_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """布尔数组中连续 True 段的 [start, stop)"""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def build_region_map(
    model: EncoderModel,
    bbox: BBox,
    resolution: int = 256,
    points: Optional[np.ndarray] = None,
    point_labels: Optional[np.ndarray] = None,
) -> RegionMap:
    """
    在包围盒上采样全部隐藏层的激活模式

    Args:
        model: 输入维度为 2 的模型
        bbox: (xmin, xmax, ymin, ymax)
        resolution: 每个方向的格子数, 至少 16
        points: 可选, 渲染时叠加的数据点
    """
    if model.input_dim != 2:
        raise ShapeError(f"区域图只支持二维输入, 模型输入维度为 {model.input_dim}")
    if resolution < MIN_RESOLUTION:
        raise DomainError(f"分辨率必须 >= {MIN_RESOLUTION}, 实际 {resolution}")
    xmin, xmax, ymin, ymax = bbox
    if not (xmax > xmin and ymax > ymin):
        raise DomainError(f"包围盒非法: {bbox}")

    patterns = model.hidden_patterns(grid_points(bbox, resolution))
    table, inverse = np.unique(patterns, axis=0, return_inverse=True)
    cells = np.asarray(inverse).reshape(resolution, resolution)

    region_map = RegionMap(
        bbox=tuple(float(v) for v in bbox),
        resolution=resolution,
        cell_code=cells,
        code_table=table,
        boundaries=_boundary_segments(cells, bbox),
        points=None if points is None else np.asarray(points, dtype=np.float64),
        point_labels=None if point_labels is None else np.asarray(point_labels),
    )
    logger.debug(f"区域图: 分辨率 {resolution}, 不同模式 {region_map.distinct}, 边界段 {len(region_map.boundaries)}")
    return region_map


def exact_region_count(weights: np.ndarray, biases: np.ndarray, bbox: BBox) -> int:
    """
    单隐藏层网络在矩形内的精确区域数

    一般位置假设下 = 1 + 穿过矩形内部的直线数 + 矩形内部的交点数。
    """
    weights = np.asarray(weights, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[1] != 2 or biases.shape != (weights.shape[0],):
        raise ShapeError(f"需要 (n, 2) 的权重与 (n,) 的偏置, 实际 {weights.shape} / {biases.shape}")
    xmin, xmax, ymin, ymax = bbox
    corners = np.array([[xmin, ymin], [xmin, ymax], [xmax, ymin], [xmax, ymax]])

    values = corners @ weights.T + biases  # (4, n)
    crossing = [k for k in range(weights.shape[0]) if values[:, k].min() < 0 < values[:, k].max()]

    intersections = 0
    for i, j in combinations(crossing, 2):
        a = weights[[i, j]]
        det = np.linalg.det(a)
        if abs(det) < 1e-12:
            continue
        px, py = np.linalg.solve(a, -biases[[i, j]])
        if xmin < px < xmax and ymin < py < ymax:
            intersections += 1
    return 1 + len(crossing) + intersections


def is_locally_affine(model: EncoderModel, x1: np.ndarray, x2: np.ndarray, tol: float = 1e-9) -> bool:
    """
    中点线性检查: 两端激活模式相同时, 表示 h 在线段上是仿射的

    Returns:
        |h(中点) − (h(x1)+h(x2))/2| 的最大值不超过 tol·(1 + 尺度)
    """
    pts = np.stack([np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64)])
    patterns = model.hidden_patterns(pts)
    if not np.array_equal(patterns[0], patterns[1]):
        raise DomainError("两端点的激活模式不同, 不在同一线性区域")
    mid = pts.mean(axis=0, keepdims=True)
    h = model.encode(np.concatenate([pts, mid])).h.data
    expected = 0.5 * (h[0] + h[1])
    scale = float(np.max(np.abs(h))) if h.size else 0.0
    return bool(np.max(np.abs(h[2] - expected)) <= tol * (1.0 + scale))


def region_statistics(
    model: EncoderModel,
    x: np.ndarray,
    resolutions: Sequence[int],
    bbox: BBox,
    layer: str = "projection",
) -> pd.DataFrame:
    """每个分辨率一行: resolution,distinct_patterns,dataset_distinct_codes"""
    dataset_codes = count_distinct_codes(model, x, layer=layer)
    rows = [
        {
            "resolution": int(res),
            "distinct_patterns": build_region_map(model, bbox, int(res)).distinct,
            "dataset_distinct_codes": dataset_codes,
        }
        for res in resolutions
    ]
    return pd.DataFrame(rows, columns=["resolution", "distinct_patterns", "dataset_distinct_codes"])
