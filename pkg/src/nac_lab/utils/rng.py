"""确定性随机数流

所有随机性都来自 (seed, stream) 构造的独立 numpy Generator, 不使用全局状态。
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    INIT = 0
    DATA = 1
    AUGMENT = 2
    CHANNEL = 3
    SHUFFLE = 4
    PROBE = 5
    EVAL = 6


def make_rng(seed: int, stream: Stream, *extra: int) -> np.random.Generator:
    """
    构造命名随机流

    Args:
        seed: 配置中的全局种子
        stream: 流编号
        extra: 额外的区分量 (例如 epoch 序号)

    Returns:
        PCG64 Generator, 相同参数下输出逐位一致
    """
    entropy = [int(seed), int(stream), *(int(e) for e in extra)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
