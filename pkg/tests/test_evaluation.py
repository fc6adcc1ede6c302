"""下游评估测试 (白盒测试)"""

import json

import numpy as np
import pytest

from nac_lab.config import ProbeConfig, TrainConfig, text_hash
from nac_lab.data import Dataset, synth
from nac_lab.errors import DomainError, ShapeError
from nac_lab.evaluation import (
    EvalReport,
    eval_retrieval,
    evaluate_model,
    extract_features,
    random_code_map,
    retrieval_map,
    train_linear_probe,
)
from nac_lab.model import ModelDims, init_model
from nac_lab.utils import Stream, make_rng


@pytest.fixture
def blobs():
    return synth("blobs", 1000, 0.3, classes=4, seed=0)


@pytest.fixture
def model():
    return init_model(ModelDims(2, (16, 16), 8), seed=1)


class TestExtractFeatures:
    """特征提取测试"""

    def test_shapes(self, model, blobs):
        """测试 h 与编码的形状"""
        features = extract_features(model, blobs.features)
        assert features.h.shape == (1000, 16)
        assert features.codes.shape == (1000, 8)
        assert set(np.unique(features.codes)) <= {-1, 1}

    def test_does_not_modify_model(self, model, blobs):
        """测试提取特征不改变参数"""
        before = {k: t.data.copy() for k, t in model.parameters().items()}
        extract_features(model, blobs.features)
        for name, tensor in model.parameters().items():
            np.testing.assert_array_equal(tensor.data, before[name])

    def test_zero_init_codes(self, blobs):
        """测试零输出时编码全为 +1"""
        m = init_model(ModelDims(2, (4,), 3), seed=0)
        for t in m.parameters().values():
            t.data = np.zeros_like(t.data)
        assert np.all(extract_features(m, blobs.features).codes == 1)


class TestLinearProbe:
    """线性探针测试"""

    def test_separable_blobs(self, blobs):
        """测试线性可分数据的留出准确率"""
        result = train_linear_probe(blobs.features, blobs.labels)
        assert result.accuracy >= 0.99
        assert result.chosen_lr in ProbeConfig().lr_grid
        assert list(result.per_lr) == sorted(ProbeConfig().lr_grid)

    def test_shuffled_labels_near_chance(self, blobs):
        """测试打乱标签后接近随机水平"""
        labels = make_rng(0, Stream.EVAL).permutation(blobs.labels)
        assert train_linear_probe(blobs.features, labels).accuracy <= 0.4

    def test_duplicate_and_constant_columns(self, blobs):
        """测试重复列与常数列不影响训练"""
        x = np.column_stack([blobs.features, blobs.features[:, 0], np.ones(len(blobs))])
        result = train_linear_probe(x, blobs.labels)
        assert result.accuracy >= 0.99

    def test_deterministic(self, blobs):
        """测试两次训练结果一致"""
        config = ProbeConfig(epochs=20)
        a = train_linear_probe(blobs.features, blobs.labels, config)
        b = train_linear_probe(blobs.features, blobs.labels, config)
        assert a == b

    def test_single_class(self):
        """测试只有一个类别"""
        with pytest.raises(DomainError):
            train_linear_probe(np.ones((20, 2)), np.zeros(20, dtype=int))

    def test_shape_mismatch(self, blobs):
        """测试特征与标签数不一致"""
        with pytest.raises(ShapeError):
            train_linear_probe(blobs.features, blobs.labels[:-1])

    def test_empty_grid(self, blobs):
        """测试空的学习率网格"""
        with pytest.raises(DomainError):
            train_linear_probe(blobs.features, blobs.labels, ProbeConfig(lr_grid=[]))


class TestRetrieval:
    """检索评估测试"""

    def test_class_codes_perfect(self):
        """测试每类一个正交编码时 mAP = 1"""
        class_codes = np.array([[1, 1, 1, 1], [1, 1, -1, -1]])
        labels = np.array([0, 0, 0, 1, 1, 1])
        report = retrieval_map(class_codes[labels], labels, class_codes, np.array([0, 1]))
        assert report.mean_ap == 1.0
        assert report.queries == 2

    def test_random_codes_near_chance(self):
        """测试随机编码的 mAP 接近 1/C"""
        index_labels = np.repeat(np.arange(4), 250)
        query_labels = np.repeat(np.arange(4), 25)
        assert random_code_map(index_labels, query_labels, 16, seed=0) == pytest.approx(0.25, abs=0.05)

    def test_eval_retrieval_splits(self, model, blobs):
        """测试索引集与查询集的检索"""
        report = eval_retrieval(model, blobs.subset(np.arange(800)), blobs.subset(np.arange(800, 1000)))
        assert report.queries + report.skipped == 200
        assert 0.0 <= report.mean_ap <= 1.0

    def test_empty_split(self, model, blobs):
        """测试空的查询集"""
        empty = Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int))
        with pytest.raises(ShapeError):
            eval_retrieval(model, blobs, empty)


class TestEvaluateModel:
    """综合评估测试"""

    def test_report_fields(self, model, blobs):
        """测试报告字段与配置哈希"""
        text = TrainConfig().dumps()
        report = evaluate_model(model, blobs, ProbeConfig(epochs=20), config_text=text)
        assert 0.0 <= report.probe_accuracy <= 1.0
        assert 0.0 <= report.map <= 1.0
        assert report.distinct_codes >= 1
        assert report.config_hash == text_hash(text)
        assert len(report.config_hash) == 16

    def test_json(self, tmp_path):
        """测试 JSON 写出"""
        report = EvalReport(probe_accuracy=0.9, chosen_lr=0.1, map=0.5, distinct_codes=12, config_hash="abc")
        path = report.save(tmp_path / "eval" / "report.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data == {
            "probe_accuracy": 0.9,
            "chosen_lr": 0.1,
            "map": 0.5,
            "distinct_codes": 12,
            "config_hash": "abc",
        }
