"""反向模式自动微分"""

from .gradcheck import GradCheckReport, check_parameters, grad_check
from .tensor import Tape, Tensor, backward, constant, forward

__all__ = [
    "Tensor",
    "Tape",
    "forward",
    "backward",
    "constant",
    "grad_check",
    "check_parameters",
    "GradCheckReport",
]
