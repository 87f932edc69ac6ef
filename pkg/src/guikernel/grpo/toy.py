"""Toy sequential GUI-navigation task and the GRPO training loop.

The world is a 5x5 grid of screens.  Actions ``up, down, left, right`` move
between neighbouring screens (bumping a wall keeps the screen), ``finish``
ends the episode.  Reward is 1 when ``finish`` is emitted on the goal screen,
0 otherwise; episodes are capped at 12 steps.  Each query is a start screen.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Completion, GroupSample, GrpoConfig, batch_objective, kl_old_new, log_softmax, softmax

ACTIONS = ("up", "down", "left", "right", "finish")
_MOVES = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}
FINISH = 4


@dataclass(frozen=True)
class GridNavEnv:
    size: int = 5
    goal: int = 24
    max_steps: int = 12

    @property
    def n_states(self) -> int:
        return self.size * self.size

    @property
    def n_actions(self) -> int:
        return len(ACTIONS)

    @property
    def starts(self) -> list[int]:
        return [s for s in range(self.n_states) if s != self.goal]

    def move(self, s: int, a: int) -> int:
        r, c = divmod(s, self.size)
        dr, dc = _MOVES[a]
        r = min(max(r + dr, 0), self.size - 1)
        c = min(max(c + dc, 0), self.size - 1)
        return r * self.size + c

    def rollout(self, theta: np.ndarray, start: int, rng: np.random.Generator) -> Completion:
        probs = softmax(theta)
        logp = log_softmax(theta)
        s = start
        steps, lp = [], 0.0
        for _ in range(self.max_steps):
            a = int(rng.choice(self.n_actions, p=probs[s]))
            steps.append((s, a))
            lp += logp[s, a]
            if a == FINISH:
                return Completion(steps, 1.0 if s == self.goal else 0.0, lp)
            s = self.move(s, a)
        return Completion(steps, 0.0, lp)

    def expected_success(self, theta: np.ndarray) -> float:
        """Exact success probability under the stochastic policy, uniform over starts."""
        probs = softmax(theta)
        v = np.zeros(self.n_states)
        for _ in range(self.max_steps):
            nv = np.zeros(self.n_states)
            nv[self.goal] += probs[self.goal, FINISH]
            for s in range(self.n_states):
                for a in range(4):
                    nv[s] += probs[s, a] * v[self.move(s, a)]
            v = nv
        return float(np.mean(v[self.starts]))


def init_theta(env: GridNavEnv) -> np.ndarray:
    return np.zeros((env.n_states, env.n_actions))


def sample_groups(theta, env: GridNavEnv, config: GrpoConfig, rng: np.random.Generator) -> list[GroupSample]:
    groups = []
    for _ in range(config.queries_per_step):
        q = int(rng.choice(env.starts))
        comps = [env.rollout(theta, q, rng) for _ in range(config.group_size)]
        groups.append(GroupSample(q, comps).score(config.stab_eps))
    return groups


def grpo_step(theta: np.ndarray, env: GridNavEnv, config: GrpoConfig, rng: np.random.Generator):
    """One iteration: sample from the frozen policy, score, advantage, ascend J.

    Returns ``(new_theta, metrics)``.
    """
    theta_old = theta.copy()
    groups = sample_groups(theta_old, env, config, rng)
    new = theta.copy()
    for _ in range(config.update_epochs):
        _, grad = batch_objective(groups, new, theta_old, config, with_grad=True)
        new = new + config.learning_rate * grad
    j = batch_objective(groups, new, theta_old, config)
    states = [s for g in groups for c in g.completions for s in c.states]
    metrics = {
        "mean_reward": float(np.mean([g.rewards.mean() for g in groups])),
        "J": j,
        "KL": kl_old_new(theta_old, new, states),
    }
    return new, metrics


def train(config: GrpoConfig, env: Optional[GridNavEnv] = None, theta: Optional[np.ndarray] = None):
    """Run ``config.iterations`` GRPO steps; returns ``(theta, history)``.

    Each history row carries ``iteration, mean_reward, J, KL`` plus
    ``success``, the exact expected success of the policy after the update.
    """
    env = env or GridNavEnv()
    rng = np.random.default_rng(config.seed)
    theta = init_theta(env) if theta is None else theta.copy()
    history = [{"iteration": 0, "mean_reward": float("nan"), "J": 0.0, "KL": 0.0,
                "success": env.expected_success(theta)}]
    for it in range(1, config.iterations + 1):
        theta, m = grpo_step(theta, env, config, rng)
        m["iteration"] = it
        m["success"] = env.expected_success(theta)
        history.append(m)
    return theta, history


def metrics_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "mean_reward", "J", "KL", "success"])
    for row in history:
        w.writerow([row["iteration"], f"{row['mean_reward']:.6f}", f"{row['J']:.6f}",
                    f"{row['KL']:.8f}", f"{row['success']:.6f}"])
    return buf.getvalue()


def moving_average(values, window: int = 10) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size < window:
        return np.array([])
    return np.convolve(v, np.ones(window) / window, mode="valid")
