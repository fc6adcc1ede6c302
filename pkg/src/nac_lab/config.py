"""配置管理模块

磁盘格式为扁平的 key=value 文本, 每行一对, # 开头为注释。
增强与探针参数使用 augment. / probe. 前缀, 例如 augment.gaussian_sigma=0.08。
"""

import hashlib
import io
import logging
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Union

from dotenv import dotenv_values

from .errors import ConfigError, DataFormatError
from .model.network import ModelDims

logger = logging.getLogger(__name__)

LOSS_KINDS = ("nac", "nac_mq", "simclr")
# 分母银行的信道似然: soft 为逐比特软信道, linear 为 exp(½L·z̃·z_k)
DENOMINATORS = ("soft", "linear")


@dataclass
class AugmentConfig:
    gaussian_sigma: float = 0.08
    rotation_max: float = 0.35  # 弧度
    scale_jitter: float = 0.1


@dataclass
class ProbeConfig:
    epochs: int = 100
    lr_grid: list[float] = field(default_factory=lambda: [0.01, 0.1, 1.0, 10.0])
    batch_size: int = 0  # 0 表示全批量
    test_fraction: float = 0.2
    seed: int = 0


@dataclass
class TrainConfig:
    """训练配置 (参考玩具任务的默认值)"""

    batch_size: int = 64  # K
    epochs: int = 60
    base_lr: float = 0.05
    warmup_epochs: int = 3
    momentum_beta: float = 0.9
    weight_decay: float = 1e-6
    p: float = 0.1
    l2_lambda: float = 0.1
    queue_size: int = 512
    momentum_decay: float = 0.99
    loss_kind: str = "nac"
    denominator: str = "soft"
    temperature: float = 0.5
    hidden: list[int] = field(default_factory=lambda: [32, 32])
    code_dim: int = 16
    head_hidden: int = 0  # 0 表示等于表示维度
    seed: int = 0
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)

    def model_dims(self, input_dim: int) -> ModelDims:
        return ModelDims(
            input_dim=input_dim,
            hidden=tuple(self.hidden),
            code_dim=self.code_dim,
            head_hidden=self.head_hidden or None,
        )

    @classmethod
    def load(cls, config_path: Union[str, Path, None] = None) -> "TrainConfig":
        """加载配置; 未给路径时使用默认值"""
        if config_path is None:
            return cls()
        text = Path(config_path).read_text(encoding="utf-8")
        config = cls.parse(text)
        logger.debug(f"已加载配置 {config_path}")
        return config

    @classmethod
    def parse(cls, text: str) -> "TrainConfig":
        """解析扁平文本并校验, 存在问题时抛出 ConfigError"""
        values = dotenv_values(stream=io.StringIO(text), interpolate=False)
        config = cls()
        problems: list[str] = []

        for key, raw in values.items():
            line = _line_of(text, key)
            if raw is None:
                raise DataFormatError(f"缺少 '=': {key}", line=line)
            target, name = config._resolve(key)
            if target is None:
                problems.append(f"未知配置项 {key} (第 {line} 行)")
                continue
            hint = typing.get_type_hints(type(target))[name]
            try:
                setattr(target, name, _coerce(raw, hint))
            except ValueError:
                problems.append(f"{key} 的取值 {raw!r} 无法解析为 {_type_name(hint)} (第 {line} 行)")

        problems.extend(config.validate())
        if problems:
            raise ConfigError(problems)
        return config

    def _resolve(self, key: str) -> tuple[Any, str]:
        section, _, name = key.rpartition(".")
        if section in ("augment", "probe"):
            target = getattr(self, section)
        elif section == "":
            target = self
        else:
            return None, key
        names = {f.name for f in fields(target) if f.name not in ("augment", "probe")}
        return (target, name) if name in names else (None, key)

    def validate(self) -> list[str]:
        """验证配置，返回错误列表"""
        errors = []

        if self.batch_size < 2:
            errors.append("batch_size 必须 >= 2")

        if self.epochs < 1:
            errors.append("epochs 必须 >= 1")

        if self.base_lr < 0:
            errors.append("base_lr 不能为负数")

        if not (0 <= self.warmup_epochs <= self.epochs):
            errors.append("warmup_epochs 必须在 0-epochs 之间")

        if not (0 <= self.momentum_beta < 1):
            errors.append("momentum_beta 必须在 [0, 1) 之间")

        if self.weight_decay < 0:
            errors.append("weight_decay 不能为负数")

        if not (0 < self.p < 0.5):
            errors.append("p 必须在 (0, 0.5) 之间")

        if self.l2_lambda < 0:
            errors.append("l2_lambda 不能为负数")

        if self.loss_kind not in LOSS_KINDS:
            errors.append(f"loss_kind 必须是 {'/'.join(LOSS_KINDS)} 之一")

        if self.denominator not in DENOMINATORS:
            errors.append(f"denominator 必须是 {'/'.join(DENOMINATORS)} 之一")

        if not (0 <= self.momentum_decay < 1):
            errors.append("momentum_decay 必须在 [0, 1) 之间")

        if self.loss_kind == "nac_mq" and self.queue_size < 2 * self.batch_size:
            errors.append("nac_mq 要求 queue_size >= 2 * batch_size")

        if self.temperature <= 0:
            errors.append("temperature 必须大于 0")

        if not self.hidden or any(w < 1 for w in self.hidden):
            errors.append("hidden 必须非空且每层宽度 >= 1")

        if self.code_dim < 1:
            errors.append("code_dim 必须 >= 1")

        if self.head_hidden < 0:
            errors.append("head_hidden 不能为负数")

        aug = self.augment
        if min(aug.gaussian_sigma, aug.rotation_max, aug.scale_jitter) < 0:
            errors.append("增强参数不能为负数")

        if aug.scale_jitter >= 1:
            errors.append("augment.scale_jitter 必须小于 1")

        if not self.probe.lr_grid:
            errors.append("probe.lr_grid 不能为空")

        if self.probe.epochs < 1:
            errors.append("probe.epochs 必须 >= 1")

        if not (0 < self.probe.test_fraction < 1):
            errors.append("probe.test_fraction 必须在 (0, 1) 之间")

        return errors

    def dumps(self) -> str:
        """序列化为扁平文本, parse(dumps()) 得到相同配置"""
        lines = ["# nac-lab 训练配置"]
        lines.extend(_flat_lines(self, ""))
        lines.extend(_flat_lines(self.augment, "augment."))
        lines.extend(_flat_lines(self.probe, "probe."))
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return text_hash(self.dumps())


def text_hash(text: str) -> str:
    """配置文本的 sha256 前 16 位十六进制"""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _flat_lines(obj: Any, prefix: str) -> list[str]:
    out = []
    for f in fields(obj):
        value = getattr(obj, f.name)
        if f.name in ("augment", "probe"):
            continue
        out.append(f"{prefix}{f.name}={_format(value)}")
    return out


def _format(value: Any) -> str:
    if isinstance(value, list):
        return ",".join(_format(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(raw: str, hint: Any) -> Any:
    raw = raw.strip()
    origin = typing.get_origin(hint)
    if origin is list:
        (item,) = typing.get_args(hint)
        return [_coerce(part, item) for part in raw.split(",") if part.strip()]
    if hint is bool:
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(raw)
    if hint is int:
        return int(raw)
    if hint is float:
        return float(raw)
    return raw


def _type_name(hint: Any) -> str:
    return getattr(hint, "__name__", str(hint))


def _line_of(text: str, key: str) -> int:
    """key 最后一次出现的行号 (与 dotenv 后者覆盖前者的语义一致)"""
    found = 0
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("export "):
            stripped = stripped[len("export ") :].lstrip()
        if stripped.split("=", 1)[0].strip() == key:
            found = number
    return found
