"""数据集"""

from .datasets import KINDS, Dataset, load_csv, save_csv, split_dataset, synth

__all__ = ["KINDS", "Dataset", "load_csv", "save_csv", "split_dataset", "synth"]
