"""Group-relative policy optimization over tabular softmax policies.

Notation used throughout:

* a *completion* is a sequence of ``(state, action)`` steps sampled from the
  frozen policy ``theta_old``;
* the per-completion ratio is ``exp(sum log pi_new - sum log pi_old)``;
* the objective for one group is
  ``sum_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta * KL(old || new)``
  where the KL is the exact categorical divergence averaged over the multiset
  of states the group's completions visited.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import GroupTooSmall, NonFiniteInput


@dataclass
class GrpoConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    kl_beta: float = 0.04
    stab_eps: float = 1e-8
    learning_rate: float = 1.0
    iterations: int = 300
    seed: int = 0
    queries_per_step: int = 4
    update_epochs: int = 1
    mean_mode: bool = False  # average clipped terms over the group instead of summing

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")
        if self.kl_beta < 0:
            raise ValueError("kl_beta must be non-negative")
        if self.stab_eps <= 0:
            raise ValueError("stab_eps must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GrpoConfig":
        return cls(**json.loads(text))


def group_advantages(rewards: Sequence[float], stab_eps: float = 1e-8) -> np.ndarray:
    """Z-score each reward within its group (population standard deviation)."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise GroupTooSmall("advantages need at least two rewards")
    return (r - r.mean()) / (r.std() + stab_eps)


def prob_ratio(logp_new, logp_old) -> float:
    """``exp(logp_new - logp_old)``; sequences are summed per completion first."""
    new = float(np.sum(logp_new))
    old = float(np.sum(logp_old))
    if not (math.isfinite(new) and math.isfinite(old)):
        raise NonFiniteInput("log-probabilities must be finite")
    return math.exp(new - old)


def clipped_term(rho: float, adv: float, clip_eps: float) -> float:
    return min(rho * adv, min(max(rho, 1.0 - clip_eps), 1.0 + clip_eps) * adv)


def softmax(theta: np.ndarray) -> np.ndarray:
    z = theta - theta.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(theta: np.ndarray) -> np.ndarray:
    z = theta - theta.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


@dataclass
class Completion:
    steps: list[tuple[int, int]]  # (state, action)
    reward: float = 0.0
    logp_old: float = 0.0

    @property
    def states(self) -> list[int]:
        return [s for s, _ in self.steps]


@dataclass
class GroupSample:
    query: object
    completions: list[Completion]
    advantages: Optional[np.ndarray] = None

    @property
    def rewards(self) -> np.ndarray:
        return np.array([c.reward for c in self.completions], dtype=float)

    def score(self, stab_eps: float) -> "GroupSample":
        self.advantages = group_advantages(self.rewards, stab_eps)
        return self


def sequence_logp(theta: np.ndarray, steps: Sequence[tuple[int, int]]) -> float:
    logp = log_softmax(theta)
    return float(sum(logp[s, a] for s, a in steps))


def kl_old_new(theta_old: np.ndarray, theta: np.ndarray, states: Sequence[int]) -> float:
    """Mean over ``states`` (a multiset) of KL(pi_old(.|s) || pi_new(.|s))."""
    if not states:
        return 0.0
    p = softmax(theta_old[states])
    return float(np.mean(np.sum(p * (log_softmax(theta_old[states]) - log_softmax(theta[states])), axis=1)))


def grpo_objective(
    group: GroupSample,
    theta: np.ndarray,
    theta_old: np.ndarray,
    config: GrpoConfig,
    with_grad: bool = False,
):
    """Objective ``J`` for one group; with ``with_grad`` also return dJ/dtheta."""
    if group.advantages is None:
        raise ValueError("group has no advantages; call score() first")
    probs = softmax(theta)
    grad = np.zeros_like(theta) if with_grad else None
    total = 0.0
    n = len(group.completions)
    scale = 1.0 / n if config.mean_mode else 1.0
    for comp, adv in zip(group.completions, group.advantages):
        logp_new = sequence_logp(theta, comp.steps)
        rho = prob_ratio(logp_new, comp.logp_old)
        unclipped = rho * adv
        clipped = min(max(rho, 1.0 - config.clip_eps), 1.0 + config.clip_eps) * adv
        total += scale * min(unclipped, clipped)
        if with_grad and unclipped <= clipped and adv != 0.0:
            # d rho / d theta[s] = rho * (onehot(a) - pi(s)) summed over steps
            coef = scale * adv * rho
            for s, a in comp.steps:
                grad[s] -= coef * probs[s]
                grad[s, a] += coef
    states = [s for c in group.completions for s in c.states]
    kl = kl_old_new(theta_old, theta, states)
    total -= config.kl_beta * kl
    if with_grad and states and config.kl_beta:
        p_old = softmax(theta_old)
        m = len(states)
        for s in states:
            # d/dtheta[s] KL(old||new) = pi_new(s) - pi_old(s)
            grad[s] -= config.kl_beta * (probs[s] - p_old[s]) / m
    if with_grad:
        return total, grad
    return total


def batch_objective(groups: Sequence[GroupSample], theta, theta_old, config: GrpoConfig, with_grad: bool = False):
    """Average of per-group objectives (the expectation over queries)."""
    if with_grad:
        js, gs = zip(*(grpo_objective(g, theta, theta_old, config, True) for g in groups))
        return float(np.mean(js)), np.mean(gs, axis=0)
    return float(np.mean([grpo_objective(g, theta, theta_old, config) for g in groups]))
