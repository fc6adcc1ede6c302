"""有限差分梯度检查"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, ShapeError
from .tensor import Tape, Tensor, backward

logger = logging.getLogger(__name__)

ABSOLUTE_FLOOR = 1e-8


@dataclass
class GradCheckReport:
    """梯度检查结果"""

    max_rel_error: float
    passed: bool
    checked: int
    tol: float
    skipped: list[tuple[int, int]] = field(default_factory=list)  # (参数序号, 展平下标)

    def __str__(self) -> str:
        status = "通过" if self.passed else "失败"
        return (
            f"[{status}] 最大相对误差 {self.max_rel_error:.3e} (容差 {self.tol:.0e}), "
            f"检查 {self.checked} 个坐标, 跳过 {len(self.skipped)} 个折点坐标"
        )


def _evaluate(loss_fn: Callable[[], Tensor]) -> tuple[float, np.ndarray]:
    with Tape() as tape:
        out = loss_fn()
    if out.size != 1:
        raise ShapeError(f"梯度检查需要标量函数, 实际形状 {out.shape}")
    return out.item(), tape.kink_signature()


def relative_error(analytic: float, numeric: float) -> float:
    """逐坐标相对误差; 绝对差不超过 1e-8 时记为 0"""
    diff = abs(analytic - numeric)
    if diff <= ABSOLUTE_FLOOR:
        return 0.0
    return diff / max(abs(analytic), abs(numeric))


def check_parameters(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """
    对一组参数做中心差分检查

    Args:
        loss_fn: 无参闭包, 使用 params 计算标量损失
        params: 叶子张量
        h: 差分步长, 取值 [1e-6, 1e-3]
        tol: 相对误差容差

    Returns:
        GradCheckReport; 正负扰动使任一 ReLU 输入改变符号的坐标被跳过并记录
    """
    if not (1e-6 <= h <= 1e-3):
        raise DomainError(f"差分步长 h={h} 不在 [1e-6, 1e-3] 内")

    for p in params:
        p.requires_grad = True

    with Tape():
        loss = loss_fn()
        if loss.size != 1:
            raise ShapeError(f"梯度检查需要标量函数, 实际形状 {loss.shape}")
        grads = backward(loss, params)

    _, base_signature = _evaluate(loss_fn)

    worst = 0.0
    checked = 0
    skipped: list[tuple[int, int]] = []

    for pi, param in enumerate(params):
        analytic = grads[param].ravel()
        original = param.data
        for j in range(original.size):
            plus = original.copy()
            plus.flat[j] += h
            param.data = plus
            f_plus, sig_plus = _evaluate(loss_fn)

            minus = original.copy()
            minus.flat[j] -= h
            param.data = minus
            f_minus, sig_minus = _evaluate(loss_fn)
            param.data = original

            crosses = not (
                np.array_equal(sig_plus, base_signature) and np.array_equal(sig_minus, base_signature)
            )
            if crosses:
                skipped.append((pi, j))
                continue

            numeric = (f_plus - f_minus) / (2.0 * h)
            worst = max(worst, relative_error(float(analytic[j]), numeric))
            checked += 1

    report = GradCheckReport(
        max_rel_error=worst,
        passed=worst <= tol,
        checked=checked,
        tol=tol,
        skipped=skipped,
    )
    if skipped:
        logger.debug(f"梯度检查跳过 {len(skipped)} 个折点坐标: {skipped[:5]}")
    return report


def grad_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """检查 f(x) 对 x 的解析梯度"""
    return check_parameters(lambda: f(x), [x], h=h, tol=tol)
