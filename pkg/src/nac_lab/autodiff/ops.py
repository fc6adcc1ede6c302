"""运算注册表: 每种运算的前向与反向规则

逐元素二元运算只允许第二个操作数沿批维广播:
形状相同, 行向量 (n,) 广播到 (B, n), 或列向量 (B, 1) 广播到 (B, n)。
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError, ShapeError

ForwardFn = Callable[[list[np.ndarray], dict], tuple[np.ndarray, dict]]
BackwardFn = Callable[[np.ndarray, "object"], list[Optional[np.ndarray]]]


@dataclass(frozen=True)
class OpDef:
    kind: str
    arity: int
    forward: ForwardFn
    backward: BackwardFn


OPS: dict[str, OpDef] = {}


def register(kind: str, arity: int, backward: BackwardFn):
    def decorator(fn: ForwardFn) -> ForwardFn:
        OPS[kind] = OpDef(kind=kind, arity=arity, forward=fn, backward=backward)
        return fn

    return decorator


def _broadcast_mode(kind: str, a: np.ndarray, b: np.ndarray) -> str:
    if a.shape == b.shape:
        return "same"
    if a.ndim == 2 and b.ndim == 1 and b.shape[0] == a.shape[1]:
        return "row"
    if a.ndim == 2 and b.shape == (a.shape[0], 1):
        return "column"
    raise ShapeError(f"{kind}: 无法广播形状 {a.shape} 与 {b.shape}")


def _reduce_to(grad: np.ndarray, mode: str) -> np.ndarray:
    if mode == "row":
        return grad.sum(axis=0)
    if mode == "column":
        return grad.sum(axis=1, keepdims=True)
    return grad


def _axis(kind: str, x: np.ndarray, attrs: dict) -> Optional[int]:
    axis = attrs.get("axis")
    if axis is not None and not (0 <= axis < x.ndim):
        raise ShapeError(f"{kind}: axis={axis} 超出形状 {x.shape}")
    return axis


def _expand(grad: np.ndarray, shape: tuple[int, ...], axis: Optional[int]) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad, shape)
    return np.broadcast_to(np.expand_dims(grad, axis), shape)


# ---------------------------------------------------------------- 线性代数


def _matmul_backward(g, node):
    a, b = (t.data for t in node.inputs)
    if node.attrs.get("transpose_b"):
        return [g @ b, g.T @ a]
    return [g @ b.T, a.T @ g]


@register("matmul", 2, _matmul_backward)
def _matmul(xs, attrs):
    a, b = xs
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul 需要二维输入, 实际 {a.shape} @ {b.shape}")
    rhs = b.T if attrs.get("transpose_b") else b
    if a.shape[1] != rhs.shape[0]:
        raise ShapeError(
            f"matmul 形状不匹配: {a.shape} @ {rhs.shape} (transpose_b={bool(attrs.get('transpose_b'))})"
        )
    return a @ rhs, {}


def _add_backward(g, node):
    return [g, _reduce_to(g, node.saved["mode"])]


@register("add", 2, _add_backward)
def _add(xs, attrs):
    a, b = xs
    mode = _broadcast_mode("add", a, b)
    return a + b, {"mode": mode}


def _mul_backward(g, node):
    a, b = (t.data for t in node.inputs)
    return [g * b, _reduce_to(g * a, node.saved["mode"])]


@register("mul", 2, _mul_backward)
def _mul(xs, attrs):
    a, b = xs
    mode = _broadcast_mode("mul", a, b)
    return a * b, {"mode": mode}


def _rowdot_backward(g, node):
    a, b = (t.data for t in node.inputs)
    return [g[:, None] * b, g[:, None] * a]


@register("rowdot", 2, _rowdot_backward)
def _rowdot(xs, attrs):
    a, b = xs
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeError(f"rowdot 需要相同的二维形状, 实际 {a.shape} 与 {b.shape}")
    return np.einsum("ij,ij->i", a, b), {}


# ---------------------------------------------------------------- 逐元素


@register("relu", 1, lambda g, node: [g * (node.inputs[0].data > 0)])
def _relu(xs, attrs):
    return np.maximum(xs[0], 0.0), {}


@register("tanh", 1, lambda g, node: [g * (1.0 - node.output.data**2)])
def _tanh(xs, attrs):
    return np.tanh(xs[0]), {}


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@register("sigmoid", 1, lambda g, node: [g * node.output.data * (1.0 - node.output.data)])
def _sigmoid(xs, attrs):
    return _stable_sigmoid(xs[0]), {}


@register("softplus", 1, lambda g, node: [g * _stable_sigmoid(node.inputs[0].data)])
def _softplus(xs, attrs):
    return np.logaddexp(0.0, xs[0]), {}


@register("log", 1, lambda g, node: [g / node.inputs[0].data])
def _log(xs, attrs):
    x = xs[0]
    if np.any(x <= 0):
        raise DomainError(f"log 的输入必须为正数, 最小值 {float(np.min(x))}")
    return np.log(x), {}


@register("exp", 1, lambda g, node: [g * node.output.data])
def _exp(xs, attrs):
    return np.exp(xs[0]), {}


@register("negate", 1, lambda g, node: [-g])
def _negate(xs, attrs):
    return -xs[0], {}


@register("scale", 1, lambda g, node: [g * node.attrs["value"]])
def _scale(xs, attrs):
    if "value" not in attrs:
        raise ShapeError("scale 缺少属性 value")
    return xs[0] * float(attrs["value"]), {}


@register("square", 1, lambda g, node: [2.0 * node.inputs[0].data * g])
def _square(xs, attrs):
    return xs[0] ** 2, {}


# ---------------------------------------------------------------- 归约


def _sum_backward(g, node):
    x = node.inputs[0].data
    return [_expand(g, x.shape, node.attrs.get("axis"))]


@register("sum", 1, _sum_backward)
def _sum(xs, attrs):
    return np.sum(xs[0], axis=_axis("sum", xs[0], attrs)), {}


def _mean_backward(g, node):
    x = node.inputs[0].data
    axis = node.attrs.get("axis")
    count = x.size if axis is None else x.shape[axis]
    return [_expand(g, x.shape, axis) / count]


@register("mean", 1, _mean_backward)
def _mean(xs, attrs):
    x = xs[0]
    axis = _axis("mean", x, attrs)
    if x.size == 0:
        raise DomainError("mean 的输入为空")
    return np.mean(x, axis=axis), {}


def _logsumexp_backward(g, node):
    x = node.inputs[0].data
    axis = node.attrs.get("axis")
    out = node.output.data
    if axis is None:
        weights = np.exp(x - out)
    else:
        weights = np.exp(x - np.expand_dims(out, axis))
    return [_expand(g, x.shape, axis) * weights]


@register("logsumexp", 1, _logsumexp_backward)
def _logsumexp(xs, attrs):
    x = xs[0]
    axis = _axis("logsumexp", x, attrs)
    if x.size == 0 or (axis is not None and x.shape[axis] == 0):
        raise DomainError("logsumexp 的输入为空, 结果无定义")
    peak = np.max(x, axis=axis, keepdims=True)
    total = np.sum(np.exp(x - peak), axis=axis, keepdims=True)
    out = peak + np.log(total)
    out = out.reshape(()) if axis is None else np.squeeze(out, axis=axis)
    return out, {}


def _l2sq_backward(g, node):
    x = node.inputs[0].data
    return [2.0 * x * _expand(g, x.shape, node.attrs.get("axis"))]


@register("l2sq", 1, _l2sq_backward)
def _l2sq(xs, attrs):
    x = xs[0]
    return np.sum(x * x, axis=_axis("l2sq", x, attrs)), {}
