"""冻结编码器的线性探针"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from sklearn.metrics import accuracy_score
from sklearn.preprocessing import StandardScaler

from ..coding.codes import sign_codes
from ..config import ProbeConfig
from ..data.datasets import Dataset, split_dataset
from ..errors import DomainError, ShapeError
from ..model.network import Pathway
from ..utils import Stream, make_rng

logger = logging.getLogger(__name__)


class Features(NamedTuple):
    h: np.ndarray  # (N, 表示维度), 供线性探针
    codes: np.ndarray  # (N, D) 投影头预激活的符号编码, 供检索


def extract_features(model: Pathway, x: np.ndarray) -> Features:
    """前向一次, 不记录计算图, 不修改模型"""
    x = np.asarray(x, dtype=np.float64)
    encoded = model.encode(x)
    return Features(h=encoded.h.data.copy(), codes=sign_codes(encoded.a.data))


@dataclass
class ProbeResult:
    """线性探针结果"""

    accuracy: float
    chosen_lr: float
    per_lr: dict[float, Optional[float]] = field(default_factory=dict)  # 发散的学习率记为 None


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def fit_softmax_regression(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    lr: float,
    config: ProbeConfig,
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """
    多项逻辑回归, 梯度下降, 零初始化, 无正则

    Returns:
        (W, b); 损失出现非有限值时返回 None
    """
    n, d = x.shape
    w = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    onehot = np.eye(n_classes)[y]
    batch = config.batch_size if 0 < config.batch_size < n else n

    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            order = np.arange(n) if batch == n else make_rng(config.seed, Stream.PROBE, epoch).permutation(n)
            for start in range(0, n, batch):
                rows = order[start : start + batch]
                probs = _softmax(x[rows] @ w + b)
                diff = (probs - onehot[rows]) / len(rows)
                w = w - lr * (x[rows].T @ diff)
                b = b - lr * diff.sum(axis=0)
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                return None
    return w, b


def train_linear_probe(
    features: np.ndarray,
    labels: np.ndarray,
    config: Optional[ProbeConfig] = None,
) -> ProbeResult:
    """
    在冻结特征上训练线性分类器

    分层 80/20 划分, 标准化统计量只来自训练部分; 按留出准确率选择学习率, 并列时取较小者。
    """
    config = config or ProbeConfig()
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ShapeError(f"特征形状 {features.shape} 与标签数 {labels.shape[0]} 不匹配")
    classes = np.unique(labels)
    if classes.size < 2:
        raise DomainError("线性探针至少需要 2 个类别")
    if not config.lr_grid:
        raise DomainError("学习率网格不能为空")

    train, test = split_dataset(Dataset(features, labels, name="probe"), config.test_fraction, config.seed)
    scaler = StandardScaler().fit(train.features)
    x_train, x_test = scaler.transform(train.features), scaler.transform(test.features)
    n_classes = int(labels.max()) + 1

    best: Optional[tuple[float, float]] = None
    per_lr: dict[float, Optional[float]] = {}
    for lr in sorted(config.lr_grid):
        fitted = fit_softmax_regression(x_train, train.labels, n_classes, lr, config)
        if fitted is None:
            logger.warning(f"线性探针在 lr={lr} 发散, 跳过")
            per_lr[lr] = None
            continue
        w, b = fitted
        accuracy = float(accuracy_score(test.labels, np.argmax(x_test @ w + b, axis=1)))
        per_lr[lr] = accuracy
        logger.debug(f"线性探针 lr={lr}: 留出准确率 {accuracy:.4f}")
        if best is None or accuracy > best[0]:
            best = (accuracy, lr)

    if best is None:
        raise DomainError("所有学习率下线性探针均发散")
    return ProbeResult(accuracy=best[0], chosen_lr=best[1], per_lr=per_lr)
