"""训练: 目标函数、增强、优化器、动量队列与训练循环"""

from .augment import augment_batch, build_views, make_views
from .diagnostics import SuiteResult, gradcheck_suite, jittered_model
from .objective import (
    DENOMINATORS,
    LossBreakdown,
    bank_rows,
    contrastive_logits,
    discrete_objective_rows,
    nac_loss,
    nac_mq_loss,
    pair_swap_matrix,
    simclr_loss,
    simclr_terms,
    soft_subsample_rows,
    soft_subsample_term,
    subsample_rows,
    subsample_term,
    variational_rows,
    variational_term,
)
from .optimizer import MomentumSGD, lr_schedule, optimizer_step
from .queue import MomentumQueue, queue_push
from .trainer import TrainResult, TrainState, Trainer, compute_loss, init_state, train, train_step

__all__ = [
    "DENOMINATORS",
    "LossBreakdown",
    "MomentumQueue",
    "MomentumSGD",
    "SuiteResult",
    "TrainResult",
    "TrainState",
    "Trainer",
    "augment_batch",
    "bank_rows",
    "build_views",
    "compute_loss",
    "contrastive_logits",
    "discrete_objective_rows",
    "gradcheck_suite",
    "init_state",
    "jittered_model",
    "lr_schedule",
    "make_views",
    "nac_loss",
    "nac_mq_loss",
    "optimizer_step",
    "pair_swap_matrix",
    "queue_push",
    "simclr_loss",
    "simclr_terms",
    "soft_subsample_rows",
    "soft_subsample_term",
    "subsample_rows",
    "subsample_term",
    "train",
    "train_step",
    "variational_rows",
    "variational_term",
]
