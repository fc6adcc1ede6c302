"""模型测试 (白盒测试)"""

import json

import numpy as np
import pytest

from nac_lab.autodiff import Tensor
from nac_lab.errors import DataFormatError, DomainError, ShapeError
from nac_lab.model import (
    DenseLayer,
    EncoderModel,
    EncoderParams,
    InferenceHead,
    ModelDims,
    MomentumState,
    ProjectionHead,
    count_parameters,
    init_model,
    load_checkpoint,
    momentum_update,
    parameter_distance,
    save_checkpoint,
)
from nac_lab.model.checkpoint import encode_json


def _layer(weight, bias):
    return DenseLayer(weight=Tensor(weight, requires_grad=True), bias=Tensor(bias, requires_grad=True))


def _zero_model(input_dim=2, hidden=4, code=3) -> EncoderModel:
    zeros = lambda o, i: _layer(np.zeros((o, i)), np.zeros(o))  # noqa: E731
    return EncoderModel(
        encoder=EncoderParams(layers=[zeros(hidden, input_dim)]),
        projection=ProjectionHead(hidden=zeros(hidden, hidden), output=zeros(code, hidden)),
        inference=InferenceHead(hidden=zeros(hidden, hidden), output=zeros(code, hidden)),
        dims=ModelDims(input_dim, (hidden,), code),
    )


@pytest.fixture
def model():
    return init_model(ModelDims(2, (8, 8), 4), seed=7)


class TestModelDims:
    """网络尺寸测试"""

    def test_head_width_defaults_to_representation(self):
        """测试头部宽度默认等于表示维度"""
        dims = ModelDims(2, (8, 5), 4)
        assert dims.representation_dim == 5
        assert dims.head_width == 5
        assert ModelDims(2, (8, 5), 4, head_hidden=12).head_width == 12

    def test_invalid_dims(self):
        """测试非法尺寸"""
        with pytest.raises(ShapeError):
            ModelDims(2, (), 4).validate()
        with pytest.raises(ShapeError):
            ModelDims(2, (8, 0), 4).validate()

    def test_dict_round_trip(self):
        """测试字典序列化"""
        dims = ModelDims(3, (8, 6), 4, head_hidden=10)
        assert ModelDims.from_dict(dims.to_dict()) == dims


class TestInitModel:
    """初始化测试"""

    def test_deterministic(self):
        """测试相同种子参数完全一致"""
        a = init_model(ModelDims(2, (8, 8), 4), seed=7)
        b = init_model(ModelDims(2, (8, 8), 4), seed=7)
        for name, tensor in a.parameters().items():
            np.testing.assert_array_equal(tensor.data, b.parameters()[name].data)

    def test_biases_zero(self, model):
        """测试偏置初始化为零"""
        for name, tensor in model.parameters().items():
            if name.endswith("bias"):
                assert not tensor.data.any()

    def test_weight_variance(self):
        """测试权重方差约为 2/fan_in"""
        big = init_model(ModelDims(1000, (1000,), 2), seed=1)
        variance = big.encoder.layers[0].weight.data.var()
        assert variance == pytest.approx(2.0 / 1000, rel=0.1)

    def test_parameter_order(self, model):
        """测试参数名的固定顺序"""
        names = list(model.parameters())
        assert names[:4] == ["encoder.0.weight", "encoder.0.bias", "encoder.1.weight", "encoder.1.bias"]
        assert names[-1] == "inference.output.bias"
        assert count_parameters(model) == sum(t.size for t in model.parameters().values())


class TestEncode:
    """前向编码测试"""

    def test_zero_model(self):
        """测试零权重模型输出全零"""
        out = _zero_model().encode(np.array([[1.0, -1.0], [0.5, 2.0]]))
        assert not out.h.data.any()
        assert not out.a.data.any()
        assert not out.z.data.any()

    def test_z_bounded(self, model):
        """测试 |z| < 1"""
        x = np.random.default_rng(0).normal(size=(50, 2)) * 10
        assert np.all(np.abs(model.encode(x).z.data) < 1)

    def test_hand_computed(self):
        """测试手算的单层编码器"""
        m = _zero_model(hidden=2, code=1)
        m.encoder.layers[0] = _layer(np.eye(2), np.array([0.0, 0.5]))
        out = m.encode(np.array([[1.0, -1.0]]))
        np.testing.assert_array_equal(out.h.data, [[1.0, 0.0]])

    def test_deterministic(self, model):
        """测试编码逐位确定"""
        x = np.random.default_rng(1).normal(size=(10, 2))
        np.testing.assert_array_equal(model.encode(x).z.data, model.encode(x).z.data)

    def test_wrong_input_dim(self, model):
        """测试输入维度错误"""
        with pytest.raises(ShapeError):
            model.encode(np.ones((3, 5)))

    def test_hidden_patterns(self, model):
        """测试隐藏层激活模式拼接"""
        patterns = model.hidden_patterns(np.ones((3, 2)))
        assert patterns.shape == (3, 16)
        assert set(np.unique(patterns)) <= {-1, 1}


class TestInferLogits:
    """推断头测试"""

    def test_zero_head(self):
        """测试零参数头输出 r = 0"""
        r = _zero_model().infer_logits(np.ones((2, 4)))
        assert not r.data.any()

    def test_hand_computed(self):
        """测试手算的单单元推断头"""
        m = _zero_model(hidden=1, code=1)
        m.inference.hidden = _layer(np.array([[3.0]]), np.array([-1.0]))
        m.inference.output = _layer(np.array([[0.5]]), np.array([0.25]))
        r = m.infer_logits(np.array([[2.0]]))
        assert r.data[0, 0] == pytest.approx(0.5 * 5.0 + 0.25)

    def test_wrong_dim(self, model):
        """测试表示维度错误"""
        with pytest.raises(ShapeError):
            model.infer_logits(np.ones((2, 3)))


class TestMomentum:
    """动量模型测试"""

    def test_copy_is_frozen(self, model):
        """测试动量副本不需要梯度"""
        slow = MomentumState.from_model(model, 0.99)
        assert all(not t.requires_grad for t in slow.parameters().values())
        assert parameter_distance(model, slow) == 0.0

    def test_decay_zero_copies_live(self, model):
        """测试 m = 0 时等于在线模型"""
        slow = MomentumState.from_model(model, 0.0)
        for t in model.parameters().values():
            t.data = t.data + 1.0
        momentum_update(model, slow)
        assert parameter_distance(model, slow) == 0.0

    def test_decay_formula(self):
        """测试 m = 0.99, θ̂ = 0, θ = 1 一步后为 0.01"""
        live = _zero_model()
        slow = MomentumState.from_model(live, 0.99)
        for t in live.parameters().values():
            t.data = np.ones_like(t.data)
        momentum_update(live, slow)
        for t in slow.parameters().values():
            np.testing.assert_allclose(t.data, 0.01)

    def test_invalid_decay(self, model):
        """测试 m 超出 [0, 1)"""
        with pytest.raises(DomainError):
            MomentumState.from_model(model, 1.0)

    def test_structure_mismatch(self, model):
        """测试结构不一致"""
        slow = MomentumState.from_model(init_model(ModelDims(2, (8,), 4), seed=0), 0.5)
        with pytest.raises(ShapeError):
            momentum_update(model, slow)

    def test_no_inference_head(self, model):
        """测试动量副本只含编码器与投影头"""
        slow = MomentumState.from_model(model, 0.9)
        assert slow.inference is None
        assert not any(name.startswith("inference.") for name in slow.parameters())
        with pytest.raises(ShapeError):
            slow.infer_logits(np.ones((2, 8)))

    def test_update_leaves_inference_alone(self, model):
        """测试更新只读取在线模型的共有参数"""
        slow = MomentumState.from_model(model, 0.5)
        before = model.inference.output.weight.data.copy()
        momentum_update(model, slow)
        np.testing.assert_array_equal(model.inference.output.weight.data, before)
        assert parameter_distance(model, slow) == 0.0

    def test_dims_optional(self):
        """测试未给 dims 时为 None"""
        model = _zero_model()
        bare = EncoderModel(encoder=model.encoder, projection=model.projection, inference=model.inference)
        assert bare.dims is None


class TestCheckpoint:
    """检查点测试"""

    def test_round_trip_bit_exact(self, model, tmp_path):
        """测试保存后重新加载逐位一致"""
        model.momentum = MomentumState.from_model(model, 0.9)
        path = save_checkpoint(model, tmp_path / "m.json", "seed=7\n")
        loaded, config_text = load_checkpoint(path)
        assert config_text == "seed=7\n"
        assert loaded.dims == model.dims
        assert parameter_distance(model, loaded) == 0.0
        assert loaded.momentum is not None and loaded.momentum.decay == 0.9

    def test_same_model_same_bytes(self, model, tmp_path):
        """测试同一模型写出相同字节"""
        a = save_checkpoint(model, tmp_path / "a.json").read_bytes()
        b = save_checkpoint(model, tmp_path / "b.json").read_bytes()
        assert a == b
        assert b"\r\n" not in a

    def test_loaded_params_trainable(self, model, tmp_path):
        """测试加载后的参数可训练"""
        loaded, _ = load_checkpoint(save_checkpoint(model, tmp_path / "m.json"))
        assert all(t.requires_grad for t in loaded.parameters().values())

    def test_bad_json(self, tmp_path):
        """测试非法 JSON"""
        path = tmp_path / "bad.json"
        path.write_text('{"dims": ', encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_checkpoint(path)

    def test_inconsistent_widths(self, model, tmp_path):
        """测试层宽与 dims 不一致"""
        path = save_checkpoint(model, tmp_path / "m.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        data["dims"]["hidden"] = [8, 6]
        path.write_text(json.dumps(data), encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_checkpoint(path)

    def test_seventeen_significant_digits(self, model, tmp_path):
        """测试浮点数按 17 位有效数字写出并逐位读回"""
        model.encoder.layers[0].weight.data[0, 0] = 0.1
        model.encoder.layers[0].bias.data[0] = -0.0
        path = save_checkpoint(model, tmp_path / "m.json")
        assert "0.10000000000000001" in path.read_text(encoding="utf-8")
        loaded, _ = load_checkpoint(path)
        assert loaded.encoder.layers[0].weight.data[0, 0] == 0.1
        assert np.signbit(loaded.encoder.layers[0].bias.data[0])
        assert parameter_distance(model, loaded) == 0.0

    def test_non_finite_parameter(self, model, tmp_path):
        """测试参数含 NaN 时拒绝写出"""
        model.projection.output.bias.data[0] = np.nan
        with pytest.raises(DataFormatError):
            save_checkpoint(model, tmp_path / "m.json")

    def test_encode_json_layout(self):
        """测试紧凑布局与整数值浮点数"""
        assert encode_json({"a": [1.0, 2, -0.0], "b": "x", "c": None}) == '{"a":[1.0,2,-0.0],"b":"x","c":null}'
