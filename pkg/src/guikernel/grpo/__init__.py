"""GRPO objective, gradients and a toy navigation trainer."""

from .core import (
    Completion,
    GroupSample,
    GrpoConfig,
    batch_objective,
    clipped_term,
    group_advantages,
    grpo_objective,
    kl_old_new,
    prob_ratio,
    sequence_logp,
    softmax,
)
from .toy import GridNavEnv, grpo_step, metrics_csv, moving_average, train
