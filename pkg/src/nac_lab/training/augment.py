"""向量数据增强: 旋转 (仅二维)、缩放抖动、高斯噪声"""

import numpy as np

from ..config import AugmentConfig
from ..errors import DomainError, ShapeError


def _check(aug: AugmentConfig) -> None:
    if min(aug.gaussian_sigma, aug.rotation_max, aug.scale_jitter) < 0:
        raise DomainError(f"增强参数不能为负数: {aug}")


def augment_batch(x: np.ndarray, aug: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """对每一行独立抽取一次增强; 参数全为 0 时原样返回"""
    _check(aug)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"增强输入必须是二维批次, 实际形状 {x.shape}")
    out = x.copy()
    n, d = out.shape

    if aug.rotation_max > 0 and d == 2:
        theta = rng.uniform(-aug.rotation_max, aug.rotation_max, size=n)
        cos, sin = np.cos(theta), np.sin(theta)
        out = np.stack([cos * out[:, 0] - sin * out[:, 1], sin * out[:, 0] + cos * out[:, 1]], axis=1)

    if aug.scale_jitter > 0:
        out = out * rng.uniform(1.0 - aug.scale_jitter, 1.0 + aug.scale_jitter, size=(n, 1))

    if aug.gaussian_sigma > 0:
        out = out + rng.normal(0.0, aug.gaussian_sigma, size=out.shape)

    return out


def make_views(x: np.ndarray, aug: AugmentConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """单个样本的两次独立增强"""
    row = np.asarray(x, dtype=np.float64).reshape(1, -1)
    first = augment_batch(row, aug, rng)[0]
    second = augment_batch(row, aug, rng)[0]
    return first, second


def build_views(batch: np.ndarray, aug: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """K 个样本 → 2K 行视图, 第 2k 与 2k+1 行来自同一样本"""
    batch = np.asarray(batch, dtype=np.float64)
    first = augment_batch(batch, aug, rng)
    second = augment_batch(batch, aug, rng)
    views = np.empty((2 * batch.shape[0], batch.shape[1]))
    views[0::2] = first
    views[1::2] = second
    return views
