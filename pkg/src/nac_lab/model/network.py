"""NAC 网络结构: ReLU MLP 编码器 + 投影头 + 推断头"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Optional, Union

import numpy as np

from ..autodiff import Tensor, forward
from ..errors import ShapeError
from ..utils import Stream, make_rng

if TYPE_CHECKING:
    from .momentum import MomentumState

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Tensor]


@dataclass(frozen=True)
class ModelDims:
    """网络各层宽度"""

    input_dim: int
    hidden: tuple[int, ...]
    code_dim: int = 16
    head_hidden: Optional[int] = None  # 默认等于表示维度

    @property
    def representation_dim(self) -> int:
        return self.hidden[-1]

    @property
    def head_width(self) -> int:
        return self.head_hidden if self.head_hidden is not None else self.representation_dim

    def validate(self) -> None:
        if not self.hidden:
            raise ShapeError("编码器至少需要一个隐藏层")
        widths = [self.input_dim, *self.hidden, self.code_dim, self.head_width]
        if any(int(w) < 1 for w in widths):
            raise ShapeError(f"所有宽度必须 >= 1, 实际 {widths}")

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "code_dim": self.code_dim,
            "head_hidden": self.head_hidden,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelDims":
        return cls(
            input_dim=int(data["input_dim"]),
            hidden=tuple(int(w) for w in data["hidden"]),
            code_dim=int(data["code_dim"]),
            head_hidden=None if data.get("head_hidden") is None else int(data["head_hidden"]),
        )


def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class DenseLayer:
    """仿射层, weight 形状 (out, in)"""

    weight: Tensor
    bias: Tensor

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return forward("add", [forward("matmul", [x, self.weight], {"transpose_b": True}), self.bias])


@dataclass
class EncoderParams:
    """ReLU MLP 编码器 h^(l) = ReLU(W^(l) h^(l-1) + b^(l))"""

    layers: list[DenseLayer]

    def __call__(self, x: Tensor) -> tuple[Tensor, list[Tensor]]:
        preactivations = []
        h = x
        for layer in self.layers:
            a = layer(h)
            preactivations.append(a)
            h = forward("relu", [a])
        return h, preactivations


@dataclass
class Head:
    """单隐藏层 MLP 头"""

    hidden: DenseLayer
    output: DenseLayer

    def __call__(self, h: Tensor) -> Tensor:
        return self.output(forward("relu", [self.hidden(h)]))


class ProjectionHead(Head):
    """投影头: 表示 h -> 编码预激活 a"""


class InferenceHead(Head):
    """推断头: 表示 h -> 伯努利 logits r"""


class Encoded(NamedTuple):
    h: Tensor
    a: Tensor
    z: Tensor


@dataclass
class Pathway:
    """编码器/投影头/推断头参数 (在线模型与动量模型共用, 动量模型不带推断头)"""

    encoder: EncoderParams
    projection: ProjectionHead
    inference: Optional[InferenceHead] = None

    @property
    def input_dim(self) -> int:
        return self.encoder.layers[0].in_dim

    def encode(self, x: ArrayLike) -> Encoded:
        """
        编码一批输入

        Returns:
            (h, a, z): 最后一层 ReLU 输出, 投影头线性输出, z = tanh(a)
        """
        x = as_tensor(x)
        if x.data.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(f"输入形状 {x.shape} 与输入维度 {self.input_dim} 不匹配")
        h, _ = self.encoder(x)
        a = self.projection(h)
        return Encoded(h=h, a=a, z=forward("tanh", [a]))

    def infer_logits(self, h: ArrayLike) -> Tensor:
        if self.inference is None:
            raise ShapeError("该通路没有推断头")
        h = as_tensor(h)
        expected = self.inference.hidden.in_dim
        if h.data.ndim != 2 or h.shape[1] != expected:
            raise ShapeError(f"表示形状 {h.shape} 与推断头输入维度 {expected} 不匹配")
        return self.inference(h)

    def parameters(self) -> dict[str, Tensor]:
        """按固定顺序列出全部参数"""
        params: dict[str, Tensor] = {}
        for i, layer in enumerate(self.encoder.layers):
            params[f"encoder.{i}.weight"] = layer.weight
            params[f"encoder.{i}.bias"] = layer.bias
        for head_name, head in (("projection", self.projection), ("inference", self.inference)):
            if head is None:
                continue
            for part in ("hidden", "output"):
                layer = getattr(head, part)
                params[f"{head_name}.{part}.weight"] = layer.weight
                params[f"{head_name}.{part}.bias"] = layer.bias
        return params


@dataclass
class EncoderModel(Pathway):
    """在线模型, 可选携带动量副本"""

    dims: Optional[ModelDims] = None
    seed: int = 0
    momentum: Optional["MomentumState"] = None

    def hidden_patterns(self, x: ArrayLike) -> np.ndarray:
        """所有编码器隐藏层预激活的符号 (a >= 0 记为 +1), 按层拼接"""
        x = as_tensor(x)
        if x.data.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(f"输入形状 {x.shape} 与输入维度 {self.input_dim} 不匹配")
        _, preactivations = self.encoder(x)
        stacked = np.concatenate([a.data for a in preactivations], axis=1)
        return np.where(stacked >= 0, 1, -1).astype(np.int8)


def _dense(rng: np.random.Generator, fan_in: int, fan_out: int, trainable: bool) -> DenseLayer:
    weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
    return DenseLayer(
        weight=Tensor(weight, requires_grad=trainable),
        bias=Tensor(np.zeros(fan_out), requires_grad=trainable),
    )


def init_model(dims: ModelDims, seed: int) -> EncoderModel:
    """
    初始化模型

    权重 ~ N(0, 2/fan_in), 偏置为零; 相同 (dims, seed) 得到逐位相同的参数。
    """
    dims.validate()
    rng = make_rng(seed, Stream.INIT)

    widths = [dims.input_dim, *dims.hidden]
    layers = [_dense(rng, widths[i], widths[i + 1], True) for i in range(len(dims.hidden))]
    rep, width, code = dims.representation_dim, dims.head_width, dims.code_dim
    projection = ProjectionHead(hidden=_dense(rng, rep, width, True), output=_dense(rng, width, code, True))
    inference = InferenceHead(hidden=_dense(rng, rep, width, True), output=_dense(rng, width, code, True))

    model = EncoderModel(
        encoder=EncoderParams(layers=layers),
        projection=projection,
        inference=inference,
        dims=dims,
        seed=seed,
    )
    logger.debug(f"初始化模型: dims={dims}, seed={seed}, 参数量={count_parameters(model)}")
    return model


def count_parameters(model: Pathway) -> int:
    return sum(p.size for p in model.parameters().values())
