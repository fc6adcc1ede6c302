"""Neural Activation Coding 实验库"""

__version__ = "0.1.0"
