"""下游评估: 线性探针与哈希检索"""

from .probe import Features, ProbeResult, extract_features, fit_softmax_regression, train_linear_probe
from .retrieval import EvalReport, eval_retrieval, evaluate_model, random_code_map, retrieval_map

__all__ = [
    "EvalReport",
    "Features",
    "ProbeResult",
    "eval_retrieval",
    "evaluate_model",
    "extract_features",
    "fit_softmax_regression",
    "random_code_map",
    "retrieval_map",
    "train_linear_probe",
]
