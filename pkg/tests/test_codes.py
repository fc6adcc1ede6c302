"""激活编码与哈希索引测试 (白盒测试)"""

import math

import numpy as np
import pytest

from nac_lab.coding import (
    ActivationCode,
    ChannelSpec,
    HashIndex,
    average_precision,
    avg_hamming,
    hamming,
    mean_average_precision,
    sign_code,
    sign_codes,
    transmit,
)
from nac_lab.errors import DataFormatError, DomainError, ShapeError
from nac_lab.utils import Stream, make_rng


class TestActivationCode:
    """激活编码测试"""

    def test_rejects_non_binary(self):
        """测试只接受 ±1"""
        with pytest.raises(DomainError):
            ActivationCode([1, 0, -1])

    def test_bitstring(self):
        """测试比特串互转"""
        code = ActivationCode([1, -1, -1, 1])
        assert code.to_bitstring() == "1001"
        assert ActivationCode.from_bitstring("1001") == code

    def test_bad_bitstring(self):
        """测试非法比特串"""
        with pytest.raises(DomainError):
            ActivationCode.from_bitstring("10x1")

    def test_hashable(self):
        """测试可作为集合元素"""
        assert len({ActivationCode([1, -1]), ActivationCode([1, -1]), ActivationCode([-1, 1])}) == 2


class TestSignCode:
    """符号编码测试"""

    def test_tie_rule(self):
        """测试 0 归为 +1"""
        assert sign_code([0.3, -0.1, 0.0]) == ActivationCode([1, -1, 1])

    def test_tanh_preserves_sign(self):
        """测试 tanh 不改变符号"""
        a = np.random.default_rng(0).normal(size=(20, 8))
        np.testing.assert_array_equal(sign_codes(np.tanh(a)), sign_codes(a))

    def test_noiseless_channel_identity(self):
        """测试无噪信道后编码不变"""
        code = sign_code([0.5, -2.0, 1.0])
        assert transmit(code, ChannelSpec(0.0), make_rng(0, Stream.CHANNEL)) == code

    def test_nan(self):
        """测试 NaN 输入"""
        with pytest.raises(DomainError):
            sign_codes(np.array([np.nan, 1.0]))


class TestHamming:
    """Hamming 距离测试"""

    def test_identical(self):
        """测试相同编码距离为 0"""
        assert hamming([1, -1, 1], [1, -1, 1]) == 0

    def test_opposite(self):
        """测试完全相反, D = 7"""
        c = np.ones(7, dtype=np.int8)
        assert hamming(c, -c) == 7

    def test_orthogonal(self):
        """测试 D = 4, 内积为 0"""
        assert hamming([1, 1, 1, 1], [1, 1, -1, -1]) == 2

    def test_length_mismatch(self):
        """测试长度不一致"""
        with pytest.raises(ShapeError):
            hamming([1, 1], [1, 1, 1])

    def test_metric_axioms(self):
        """测试度量公理 (随机三元组)"""
        rng = make_rng(0, Stream.EVAL)
        for _ in range(200):
            D = int(rng.integers(1, 9))
            a, b, c = (np.where(rng.random(D) < 0.5, 1, -1) for _ in range(3))
            assert hamming(a, b) == hamming(b, a) >= 0
            assert (hamming(a, b) == 0) == bool(np.array_equal(a, b))
            assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


class TestAvgHamming:
    """平均 Hamming 距离测试"""

    def test_antipodal(self):
        """测试两个对偶编码, D = 5"""
        c = np.ones(5, dtype=np.int8)
        assert avg_hamming([c, -c]) == 5.0

    def test_identical(self):
        """测试相同编码"""
        assert avg_hamming([[1, -1]] * 4) == 0.0

    def test_all_two_bit_codes(self):
        """测试 D = 2 的全部 4 个编码 → 4/3"""
        assert avg_hamming([[1, 1], [1, -1], [-1, 1], [-1, -1]]) == pytest.approx(4 / 3)

    def test_single_code(self):
        """测试少于 2 个编码"""
        with pytest.raises(DomainError):
            avg_hamming([[1, 1]])


@pytest.fixture
def index():
    return HashIndex.from_codes(
        ids=[10, 11, 12],
        codes=np.array([[1, 1, 1, 1], [1, 1, -1, -1], [-1, -1, -1, -1]]),
        labels=[0, 1, 0],
    )


class TestHashIndex:
    """哈希索引测试"""

    def test_stored_code_first(self, index):
        """测试查询已存编码时排第一"""
        assert index.query([1, 1, -1, -1], 1) == [11]

    def test_tie_lower_id_first(self):
        """测试距离相同时 id 小者在前"""
        idx = HashIndex.from_codes([5, 2], np.array([[1, -1], [-1, 1]]), [0, 0])
        assert idx.query([1, 1], 2) == [2, 5]

    def test_hand_ranking(self, index):
        """测试手算的排序"""
        # 距离: 10→1, 11→1, 12→3
        assert index.query([1, 1, 1, -1], 3) == [10, 11, 12]

    def test_k_larger_than_index(self, index):
        """测试 k 超过条目数"""
        assert len(index.query([1, 1, 1, 1], 10)) == 3

    def test_invalid_k(self, index):
        """测试 k < 1"""
        with pytest.raises(DomainError):
            index.query([1, 1, 1, 1], 0)

    def test_duplicate_ids(self):
        """测试重复 id"""
        with pytest.raises(DomainError):
            HashIndex.from_codes([1, 1], np.array([[1], [-1]]), [0, 0])

    def test_csv_round_trip(self, index, tmp_path):
        """测试编码文件导出再导入"""
        path = index.export_csv(tmp_path / "codes.csv")
        assert path.read_text(encoding="utf-8").splitlines()[0] == "10,0,1111"
        loaded = HashIndex.import_csv(path)
        np.testing.assert_array_equal(loaded.codes, index.codes)
        np.testing.assert_array_equal(loaded.labels, index.labels)

    def test_csv_bad_bits(self, tmp_path):
        """测试编码文件中的非法比特串"""
        path = tmp_path / "codes.csv"
        path.write_text("0,0,101\n1,1,1x1\n", encoding="utf-8")
        with pytest.raises(DataFormatError) as info:
            HashIndex.import_csv(path)
        assert info.value.line == 2

    def test_csv_empty(self, tmp_path):
        """测试空编码文件"""
        path = tmp_path / "codes.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataFormatError):
            HashIndex.import_csv(path)


class TestMeanAveragePrecision:
    """检索 mAP 测试"""

    def test_average_precision_pattern(self):
        """测试 [相关, 不相关, 相关] → 0.8333"""
        assert average_precision([True, False, True]) == pytest.approx((1 + 2 / 3) / 2)
        assert average_precision([True, False, True]) == pytest.approx(0.8333, abs=1e-4)

    def test_all_relevant(self, index):
        """测试全部相关时 mAP = 1"""
        idx = HashIndex.from_codes([0, 1], np.array([[1, 1], [-1, -1]]), [3, 3])
        assert mean_average_precision(idx, [([1, 1], 3)]).mean_ap == 1.0

    def test_hand_computed_query(self, index):
        """测试单条查询的手算 AP"""
        # 查询 1111 (类 0): 排序 10(类0), 11(类1), 12(类0) → AP = (1 + 2/3)/2
        report = mean_average_precision(index, [([1, 1, 1, 1], 0)])
        assert report.mean_ap == pytest.approx(5 / 6)

    def test_absent_class_skipped(self, index):
        """测试类别不在索引中的查询被跳过"""
        report = mean_average_precision(index, [([1, 1, 1, 1], 0), ([1, 1, 1, 1], 7)])
        assert report.queries == 1
        assert report.skipped == 1

    def test_random_codes_near_chance(self):
        """测试随机编码的 mAP 接近 1/C"""
        rng = make_rng(0, Stream.EVAL)
        labels = np.repeat(np.arange(4), 250)
        codes = np.where(rng.random((1000, 16)) < 0.5, 1, -1)
        idx = HashIndex.from_codes(np.arange(1000), codes, labels)
        queries = [(np.where(rng.random(16) < 0.5, 1, -1), int(c)) for c in np.repeat(np.arange(4), 25)]
        assert mean_average_precision(idx, queries).mean_ap == pytest.approx(0.25, abs=0.05)
        assert not math.isnan(mean_average_precision(idx, queries).mean_ap)
