"""反向模式自动微分: Tensor 与 Tape"""

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from ..errors import NacError, NumericalError, ShapeError

logger = logging.getLogger(__name__)

_ACTIVE_TAPES: list["Tape"] = []


class Tensor:
    """
    稠密 float64 数组, 计算图中的一个节点

    叶子张量 (node 为 None) 可以设置 requires_grad=True 成为参数;
    没有 tape 引用的张量视为不可变值, 可以只读共享。
    """

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node: Optional["Node"] = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def values(self) -> np.ndarray:
        """按行展平的数值"""
        return self.data.ravel()

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() 需要单元素张量, 实际形状 {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        label = f"{self.name}, " if self.name else ""
        return f"Tensor({label}shape={self.shape}, requires_grad={self.requires_grad})"

    # 运算符语法糖, 全部转发到 forward()
    def __add__(self, other: "Tensor") -> "Tensor":
        return forward("add", [self, _wrap(other)])

    def __sub__(self, other: "Tensor") -> "Tensor":
        return forward("add", [self, forward("negate", [_wrap(other)])])

    def __mul__(self, other: Any) -> "Tensor":
        if isinstance(other, (int, float)):
            return forward("scale", [self], {"value": float(other)})
        return forward("mul", [self, _wrap(other)])

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return forward("negate", [self])

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return forward("matmul", [self, _wrap(other)])


def _wrap(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def constant(data: Any) -> Tensor:
    """不参与求导的常量张量"""
    return Tensor(data, requires_grad=False)


@dataclass
class Node:
    """Tape 上记录的一次运算"""

    index: int
    kind: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    attrs: dict = field(default_factory=dict)
    saved: dict = field(default_factory=dict)
    tape: Optional["Tape"] = None


class Tape:
    """
    运算记录带

    节点按执行顺序追加, 因此天然是拓扑序 (父节点总在子节点之前)。
    用法:

        with Tape():
            loss = ...
        grads = backward(loss, params)
    """

    def __init__(self) -> None:
        self.nodes: list[Node] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc: object) -> None:
        _ACTIVE_TAPES.remove(self)

    def __len__(self) -> int:
        return len(self.nodes)

    def record(
        self,
        kind: str,
        inputs: Sequence[Tensor],
        output: Tensor,
        attrs: dict,
        saved: dict,
    ) -> Node:
        node = Node(
            index=len(self.nodes),
            kind=kind,
            inputs=tuple(inputs),
            output=output,
            attrs=attrs,
            saved=saved,
            tape=self,
        )
        self.nodes.append(node)
        return node

    def kink_signature(self) -> np.ndarray:
        """所有已记录 ReLU 输入的符号模式"""
        patterns = [node.inputs[0].data.ravel() > 0 for node in self.nodes if node.kind == "relu"]
        if not patterns:
            return np.zeros(0, dtype=bool)
        return np.concatenate(patterns)


def current_tape() -> Optional[Tape]:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def forward(kind: str, inputs: Sequence[Tensor], attrs: Optional[dict] = None) -> Tensor:
    """
    执行一次运算并 (在需要时) 记录到当前 tape

    Args:
        kind: 运算种类, 见 ops.OPS
        inputs: 输入张量
        attrs: 标量属性 (axis, value, transpose_b 等)

    Returns:
        结果张量; 任一输入需要梯度且存在活动 tape 时会被记录
    """
    from .ops import OPS

    if kind not in OPS:
        raise NacError(f"未知运算种类: {kind}")
    op = OPS[kind]
    attrs = dict(attrs or {})
    if len(inputs) != op.arity:
        raise ShapeError(f"{kind} 需要 {op.arity} 个输入, 实际 {len(inputs)} 个")

    arrays = [t.data for t in inputs]
    out_data, saved = op.forward(arrays, attrs)

    if not np.all(np.isfinite(out_data)) and all(np.all(np.isfinite(a)) for a in arrays):
        raise NumericalError(kind, f"有限输入产生了非有限输出, 输入形状 {[a.shape for a in arrays]}")

    out = Tensor(out_data)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = tape.record(kind, inputs, out, attrs, saved)
    return out


def backward(loss: Tensor, params: Optional[Iterable[Tensor]] = None) -> dict[Tensor, np.ndarray]:
    """
    从标量损失反向传播

    Args:
        loss: 单元素张量
        params: 需要返回梯度的叶子张量; 不可达的叶子得到全零梯度

    Returns:
        叶子张量 -> 梯度数组 (同时写入各自的 .grad)
    """
    from .ops import OPS

    if loss.size != 1:
        raise ShapeError(f"backward 需要标量损失, 实际形状 {loss.shape}")

    leaves: dict[int, Tensor] = {}
    leaf_grads: dict[int, np.ndarray] = {}

    if loss.node is not None:
        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        tape = loss.node.tape
        for node in reversed(tape.nodes[: loss.node.index + 1]):
            upstream = pending.pop(id(node.output), None)
            if upstream is None:
                continue
            input_grads = OPS[node.kind].backward(upstream, node)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if not np.all(np.isfinite(grad)):
                    raise NumericalError(node.kind, "反向传播产生了非有限梯度")
                grad = np.broadcast_to(grad, tensor.shape)
                if tensor.node is None:
                    leaves[id(tensor)] = tensor
                    store = leaf_grads
                else:
                    store = pending
                key = id(tensor)
                store[key] = store[key] + grad if key in store else np.array(grad)

    result: dict[Tensor, np.ndarray] = {}
    targets = list(params) if params is not None else list(leaves.values())
    for tensor in targets:
        grad = leaf_grads.get(id(tensor))
        if grad is None:
            grad = np.zeros_like(tensor.data)
        tensor.grad = grad
        result[tensor] = grad
    return result
