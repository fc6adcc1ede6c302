"""动量特征队列 (先进先出环形缓冲)"""

import numpy as np

from ..errors import DomainError, ShapeError


class MomentumQueue:
    """容量 M 的特征队列; 存入的行是脱离计算图的副本"""

    def __init__(self, capacity: int, dim: int):
        if capacity < 1 or dim < 1:
            raise DomainError(f"队列容量与维度必须 >= 1, 实际 M={capacity}, D={dim}")
        self.capacity = capacity
        self.dim = dim
        self.memory = np.zeros((capacity, dim))
        self._ptr_pos = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def is_empty(self) -> bool:
        return self._size == 0

    def push(self, values: np.ndarray) -> "MomentumQueue":
        values = np.array(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.shape[1] != self.dim:
            raise ShapeError(f"队列行维度应为 {self.dim}, 实际形状 {values.shape}")
        if values.shape[0] > self.capacity:
            values = values[-self.capacity :]

        num_values = values.shape[0]
        residual = self.capacity - self._ptr_pos
        new_ptr_pos = (self._ptr_pos + num_values) % self.capacity

        if residual < num_values:
            self.memory[self._ptr_pos :] = values[:residual]
            self.memory[:new_ptr_pos] = values[residual:]
        else:
            self.memory[self._ptr_pos : self._ptr_pos + num_values] = values
        self._ptr_pos = new_ptr_pos
        self._size = min(self._size + num_values, self.capacity)
        return self

    def contents(self) -> np.ndarray:
        """按入队先后顺序 (最旧在前) 返回副本"""
        if self._size < self.capacity:
            return self.memory[: self._size].copy()
        return np.concatenate([self.memory[self._ptr_pos :], self.memory[: self._ptr_pos]])


def queue_push(queue: MomentumQueue, rows: np.ndarray) -> MomentumQueue:
    return queue.push(rows)
