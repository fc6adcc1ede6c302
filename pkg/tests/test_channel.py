"""二进制对称信道测试 (白盒测试)"""

import math

import numpy as np
import pytest

from nac_lab.analysis import all_messages
from nac_lab.coding import (
    ActivationCode,
    ChannelSpec,
    binary_entropy,
    expected_noisy_dot,
    log_cond_prob,
    log_cond_table,
    transmit,
)
from nac_lab.errors import DomainError, ShapeError
from nac_lab.utils import Stream, make_rng


class TestChannelSpec:
    """信道参数测试"""

    @pytest.mark.parametrize("p", [-0.1, 0.5, 0.7, float("nan")])
    def test_invalid_p(self, p):
        """测试非法翻转概率"""
        with pytest.raises(DomainError):
            ChannelSpec(p)

    def test_scale(self):
        """测试 L = ln((1−p)/p)"""
        assert ChannelSpec(0.1).scale == pytest.approx(math.log(9))
        assert ChannelSpec(0.0).scale == math.inf

    def test_binary_entropy(self):
        """测试二元熵"""
        assert binary_entropy(0.5) == pytest.approx(math.log(2))
        assert binary_entropy(0.0) == 0.0


class TestTransmit:
    """信道传输测试"""

    def test_noiseless(self):
        """测试 p = 0 时输出等于输入"""
        code = ActivationCode([1, -1, 1, 1])
        assert transmit(code, ChannelSpec(0.0), make_rng(0, Stream.CHANNEL)) == code

    def test_flip_fraction(self):
        """测试 p = 0.3 时翻转比例"""
        code = ActivationCode(np.ones(10000, dtype=np.int8))
        noisy = transmit(code, ChannelSpec(0.3), make_rng(0, Stream.CHANNEL))
        fraction = float(np.mean(noisy.bits == -1))
        assert 0.27 <= fraction <= 0.33

    def test_deterministic(self):
        """测试固定种子结果一致"""
        code = ActivationCode(np.ones(64, dtype=np.int8))
        a = transmit(code, ChannelSpec(0.2), make_rng(5, Stream.CHANNEL))
        b = transmit(code, ChannelSpec(0.2), make_rng(5, Stream.CHANNEL))
        assert a == b

    def test_matrix_input(self):
        """测试矩阵输入按行传输"""
        codes = np.ones((3, 5), dtype=np.int8)
        out = transmit(codes, ChannelSpec(0.2), make_rng(0, Stream.CHANNEL))
        assert out.shape == (3, 5)


class TestLogCondProb:
    """条件概率测试"""

    def test_no_flip(self):
        """测试 c̃ = c, D = 2, p = 0.1 → ln 0.81"""
        c = ActivationCode([1, -1])
        assert log_cond_prob(c, c, ChannelSpec(0.1)) == pytest.approx(math.log(0.81), abs=1e-12)
        assert math.log(0.81) == pytest.approx(-0.2107, abs=1e-4)

    def test_all_flipped(self):
        """测试全部翻转, D = 2, p = 0.1 → ln 0.01"""
        value = log_cond_prob([-1, 1], [1, -1], ChannelSpec(0.1))
        assert value == pytest.approx(math.log(0.01), abs=1e-12)
        assert value == pytest.approx(-4.6052, abs=1e-4)

    @pytest.mark.parametrize("D", [1, 4, 8, 12])
    def test_normalization(self, D):
        """测试所有 2^D 个输出的概率和为 1"""
        spec = ChannelSpec(0.17)
        c = np.where(make_rng(D, Stream.EVAL).random(D) < 0.5, 1, -1)
        table = log_cond_table(all_messages(D), c[None, :], spec)
        assert float(np.exp(table).sum()) == pytest.approx(1.0, abs=1e-12)

    def test_noiseless_mismatch(self):
        """测试 p = 0 时不同编码报错"""
        with pytest.raises(DomainError):
            log_cond_prob([1, 1], [1, -1], ChannelSpec(0.0))
        assert log_cond_prob([1, 1], [1, 1], ChannelSpec(0.0)) == 0.0

    def test_length_mismatch(self):
        """测试长度不一致"""
        with pytest.raises(ShapeError):
            log_cond_prob([1, 1], [1, 1, 1], ChannelSpec(0.1))


class TestExpectedNoisyDot:
    """带噪内积期望测试"""

    def test_identical_codes(self):
        """测试 c_j = c_i 时为 0.8·D"""
        c = np.ones(10, dtype=np.int8)
        assert expected_noisy_dot(c, c, ChannelSpec(0.1)) == pytest.approx(8.0)

    def test_monte_carlo(self):
        """测试 p = 0.25, c_i·c_j = 4 时期望为 2"""
        ci = np.array([1, 1, 1, 1, 1, 1], dtype=np.int8)
        cj = np.array([1, 1, 1, 1, 1, -1], dtype=np.int8)
        spec = ChannelSpec(0.25)
        assert expected_noisy_dot(ci, cj, spec) == pytest.approx(2.0)

        rng = make_rng(0, Stream.CHANNEL)
        noisy = transmit(np.tile(ci, (200_000, 1)), spec, rng)
        dots = noisy.astype(np.float64) @ cj
        stderr = dots.std() / math.sqrt(len(dots))
        assert abs(dots.mean() - 2.0) < 3 * stderr + 1e-9

    def test_half_is_zero(self):
        """测试 p → 0.5 时期望趋于 0"""
        assert abs(expected_noisy_dot([1, 1], [1, 1], ChannelSpec(0.4999999))) < 1e-5
