"""翻转概率扫描与方法对比"""

import dataclasses
import logging
import math
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from ..config import TrainConfig
from ..data.datasets import Dataset, split_dataset
from ..errors import DomainError, TrainingDivergedError
from ..evaluation.probe import extract_features, train_linear_probe
from ..evaluation.retrieval import eval_retrieval, random_code_map

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["p", "linear_probe_accuracy", "retrieval_map", "status"]
COMPARE_COLUMNS = ["method", "linear_probe_accuracy", "retrieval_map", "final_loss", "status"]


def _train(config: TrainConfig, x: np.ndarray):
    from ..training.trainer import train

    return train(config, x)


def _downstream(model, dataset: Dataset, config: TrainConfig) -> tuple[float, float]:
    """在整个数据集上评估: 探针用 h, 检索用分层划分的索引/查询集"""
    probe = train_linear_probe(extract_features(model, dataset.features).h, dataset.labels, config.probe)
    index_split, query_split = split_dataset(
        dataset, config.probe.test_fraction, config.probe.seed, tags=("index", "query")
    )
    return probe.accuracy, eval_retrieval(model, index_split, query_split).mean_ap


def flip_sweep(config: TrainConfig, dataset: Dataset, p_list: Sequence[float]) -> pd.DataFrame:
    """
    每个 p 训练一个模型并评估两项下游指标

    训练发散的 p 记为 status=diverged, 指标为空, 扫描继续。
    """
    for p in p_list:
        if not (0.0 < p < 0.5):
            raise DomainError(f"p={p} 不在 (0, 0.5) 内")

    rows = []
    for p in p_list:
        run_config = dataclasses.replace(config, p=float(p))
        logger.info(f"扫描 p={p}")
        try:
            result = _train(run_config, dataset.features)
            accuracy, mean_ap = _downstream(result.model, dataset, run_config)
            rows.append({"p": float(p), "linear_probe_accuracy": accuracy, "retrieval_map": mean_ap, "status": "ok"})
        except TrainingDivergedError as e:
            logger.warning(f"p={p} 训练发散: {e}")
            rows.append({"p": float(p), "linear_probe_accuracy": math.nan, "retrieval_map": math.nan, "status": "diverged"})
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def compare_methods(
    config: TrainConfig,
    dataset: Dataset,
    methods: Sequence[str] = ("nac", "nac_mq", "simclr"),
) -> pd.DataFrame:
    """
    相同数据与种子下对比各训练目标, 另附随机编码的检索基线

    对比学习基线的哈希编码同样取投影输出的符号。
    """
    rows = []
    for method in methods:
        run_config = dataclasses.replace(config, loss_kind=method)
        problems = run_config.validate()
        if problems:
            raise DomainError(f"{method} 的配置无效: {'; '.join(problems)}")
        logger.info(f"对比方法 {method}")
        try:
            result = _train(run_config, dataset.features)
            accuracy, mean_ap = _downstream(result.model, dataset, run_config)
            rows.append(
                {
                    "method": method,
                    "linear_probe_accuracy": accuracy,
                    "retrieval_map": mean_ap,
                    "final_loss": result.final_loss,
                    "status": "ok",
                }
            )
        except TrainingDivergedError as e:
            logger.warning(f"{method} 训练发散: {e}")
            rows.append(
                {
                    "method": method,
                    "linear_probe_accuracy": math.nan,
                    "retrieval_map": math.nan,
                    "final_loss": math.nan,
                    "status": "diverged",
                }
            )

    index_split, query_split = split_dataset(
        dataset, config.probe.test_fraction, config.probe.seed, tags=("index", "query")
    )
    rows.append(
        {
            "method": "random_codes",
            "linear_probe_accuracy": math.nan,
            "retrieval_map": random_code_map(index_split.labels, query_split.labels, config.code_dim, config.seed),
            "final_loss": math.nan,
            "status": "ok",
        }
    )
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)


def write_report(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """CSV 报告: 表头 + 6 位有效数字"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.6g", lineterminator="\n", encoding="utf-8")
    return path
