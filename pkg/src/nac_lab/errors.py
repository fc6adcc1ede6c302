"""异常定义"""

from typing import Optional


class NacError(ValueError):
    """所有库内异常的基类"""


class ShapeError(NacError):
    """形状/维度不匹配"""


class DomainError(NacError):
    """数学定义域错误 (log 非正数, -inf 概率, 非法翻转概率等)"""


class NumericalError(NacError):
    """有限输入产生了 NaN/inf"""

    def __init__(self, kind: str, message: str):
        super().__init__(f"[{kind}] {message}")
        self.kind = kind


class EnumerationLimitError(NacError):
    """精确枚举超出规模上限"""


class DataFormatError(NacError):
    """输入文件格式错误"""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"第 {line} 行: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(NacError):
    """配置错误"""

    def __init__(self, problems: list[str]):
        super().__init__("配置错误: " + "; ".join(problems))
        self.problems = problems


class TrainingDivergedError(NacError):
    """训练损失出现非有限值"""

    def __init__(self, step: int, kind: Optional[str], message: str):
        super().__init__(f"第 {step} 步训练发散 (算子 {kind or '未知'}): {message}")
        self.step = step
        self.kind = kind
