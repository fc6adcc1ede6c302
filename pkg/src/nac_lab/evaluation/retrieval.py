"""哈希检索评估与综合评估报告"""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..coding.index import HashIndex, RetrievalReport, mean_average_precision
from ..config import ProbeConfig, text_hash
from ..data.datasets import Dataset, split_dataset
from ..errors import ShapeError
from ..model.network import Pathway
from ..utils import Stream, make_rng
from .probe import extract_features, train_linear_probe

logger = logging.getLogger(__name__)


def retrieval_map(
    index_codes: np.ndarray,
    index_labels: np.ndarray,
    query_codes: np.ndarray,
    query_labels: np.ndarray,
) -> RetrievalReport:
    """用编码矩阵建索引 (id 为行号) 并计算查询的 mAP"""
    if len(index_labels) == 0 or len(query_labels) == 0:
        raise ShapeError("索引集与查询集都不能为空")
    index = HashIndex.from_codes(np.arange(len(index_labels)), index_codes, index_labels)
    return mean_average_precision(index, list(zip(query_codes, (int(y) for y in query_labels))))


def eval_retrieval(model: Pathway, index_split: Dataset, query_split: Dataset) -> RetrievalReport:
    """索引集编码建表, 查询集 (不在表中) 逐条检索"""
    if len(index_split) == 0 or len(query_split) == 0:
        raise ShapeError("索引集与查询集都不能为空")
    index_codes = extract_features(model, index_split.features).codes
    query_codes = extract_features(model, query_split.features).codes
    report = retrieval_map(index_codes, index_split.labels, query_codes, query_split.labels)
    logger.debug(f"检索 mAP={report.mean_ap:.4f} (查询 {report.queries}, 跳过 {report.skipped})")
    return report


def random_code_map(index_labels: np.ndarray, query_labels: np.ndarray, code_dim: int, seed: int) -> float:
    """随机 ±1 编码的 mAP, 作为检索的零假设基线"""
    rng = make_rng(seed, Stream.EVAL)
    index_codes = np.where(rng.random((len(index_labels), code_dim)) < 0.5, 1, -1)
    query_codes = np.where(rng.random((len(query_labels), code_dim)) < 0.5, 1, -1)
    return retrieval_map(index_codes, index_labels, query_codes, query_labels).mean_ap


@dataclass
class EvalReport:
    """评估指标, 写出为 JSON"""

    probe_accuracy: Optional[float] = None
    chosen_lr: Optional[float] = None
    map: Optional[float] = None
    distinct_codes: Optional[int] = None
    config_hash: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, ensure_ascii=False) + "\n"

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_json())
        return path


def _round6(value: float) -> float:
    return float(f"{value:.6g}")


def evaluate_model(
    model: Pathway,
    dataset: Dataset,
    probe: Optional[ProbeConfig] = None,
    config_text: Optional[str] = None,
) -> EvalReport:
    """
    线性探针 + 检索的一站式评估

    检索时数据按同样的分层 80/20 规则划分为索引集与查询集。
    """
    probe = probe or ProbeConfig()
    features = extract_features(model, dataset.features)
    result = train_linear_probe(features.h, dataset.labels, probe)

    index_split, query_split = split_dataset(dataset, probe.test_fraction, probe.seed, tags=("index", "query"))
    retrieval = eval_retrieval(model, index_split, query_split)
    distinct = int(np.unique(features.codes, axis=0).shape[0])

    return EvalReport(
        probe_accuracy=_round6(result.accuracy),
        chosen_lr=result.chosen_lr,
        map=_round6(retrieval.mean_ap),
        distinct_codes=distinct,
        config_hash=text_hash(config_text) if config_text is not None else None,
    )
