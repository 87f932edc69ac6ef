"""Two-stage ensemble voting over independent agent proposals.

Stage one picks the action type by majority.  Stage two aggregates the
parameters of the proposals that share the winning type:

=================  ==========================================================
coordinates        centroid of proposed points, adopt the nearest candidate
PRESS / STATUS     most frequent value
TYPE text          most frequent string (compared after NFC normalization)
duration           original value nearest to the arithmetic mean
thought            copied from the agent that supplied the adopted parameter
=================  ==========================================================

All ties go to the lowest agent index.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .actions import Action, action_from_record, parse_action, serialize_action
from .errors import EmptyProposalSet, NoMatchingProposals


@dataclass(frozen=True)
class Proposal:
    agent_index: int
    action: Action
    thought: str = ""
    # key of the information the agent asks for when action is need_feedback
    request: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"agent": self.agent_index, "action": serialize_action(self.action), "thought": self.thought}
        if self.request is not None:
            d["request"] = self.request
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Proposal":
        """Inverse of :meth:`to_dict`; ``action`` may be a JSON string or a record."""
        rec = d["action"]
        action = parse_action(rec) if isinstance(rec, str) else action_from_record(rec)
        return cls(int(d["agent"]), action, str(d.get("thought", "")), d.get("request"))


@dataclass(frozen=True)
class EnsembleDecision:
    action: Action
    source_agent: int
    thought: str
    vote_tally: dict = field(default_factory=dict)
    request: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "action": serialize_action(self.action),
            "source_agent": self.source_agent,
            "thought": self.thought,
            "tally": dict(sorted(self.vote_tally.items())),
        }


def _check_unique(proposals: Sequence[Proposal]) -> None:
    idx = [p.agent_index for p in proposals]
    if len(set(idx)) != len(idx):
        raise ValueError("agent_index must be unique within a round")


def vote_action_type(proposals: Sequence[Proposal]) -> tuple[str, dict[str, int]]:
    """Majority vote on intent type.

    Tied types are ordered by their earliest (lowest-index) proposer.
    """
    if not proposals:
        raise EmptyProposalSet("no proposals to vote on")
    _check_unique(proposals)
    tally: dict[str, int] = Counter(p.action.intent for p in proposals)
    earliest: dict[str, int] = {}
    for p in proposals:
        t = p.action.intent
        earliest[t] = min(earliest.get(t, p.agent_index), p.agent_index)
    winner = min(tally, key=lambda t: (-tally[t], earliest[t]))
    return winner, dict(tally)


def _frequency_winner(values: list[tuple[object, int]]) -> tuple[object, int]:
    """(value, agent) pairs -> most frequent value and its lowest-index proposer."""
    counts: Counter = Counter(v for v, _ in values)
    first: dict = {}
    for v, a in values:
        first[v] = min(first.get(v, a), a)
    best = min(counts, key=lambda v: (-counts[v], first[v]))
    return best, first[best]


def _centroid_pick(points: list[tuple[tuple[int, int], int]]) -> tuple[tuple[int, int], int]:
    n = len(points)
    sx = sum(p[0] for p, _ in points)
    sy = sum(p[1] for p, _ in points)
    # compare n^2 * squared distances to keep the arithmetic exact
    def key(item):
        (x, y), agent = item
        return ((n * x - sx) ** 2 + (n * y - sy) ** 2, agent)

    return min(points, key=key)


def _nearest_to_mean(durations: list[tuple[int, int]]) -> tuple[int, int]:
    n = len(durations)
    total = sum(d for d, _ in durations)
    return min(durations, key=lambda item: (abs(n * item[0] - total), item[1]))


def aggregate_parameters(
    winning_type: str, proposals: Sequence[Proposal], tally: Optional[dict] = None
) -> EnsembleDecision:
    matching = sorted((p for p in proposals if p.action.intent == winning_type), key=lambda p: p.agent_index)
    if not matching:
        raise NoMatchingProposals(f"no proposal of type {winning_type!r}")
    by_agent = {p.agent_index: p for p in matching}

    if winning_type in ("click", "swipe", "long_press"):
        _, source = _centroid_pick([(p.action.point, p.agent_index) for p in matching])
        action = by_agent[source].action
        if winning_type == "long_press":
            dur, _ = _nearest_to_mean([(p.action.duration, p.agent_index) for p in matching])
            action = replace(action, duration=dur)
    elif winning_type == "press":
        _, source = _frequency_winner([(p.action.press, p.agent_index) for p in matching])
        action = by_agent[source].action
    elif winning_type == "status":
        _, source = _frequency_winner([(p.action.status, p.agent_index) for p in matching])
        action = by_agent[source].action
        timed = [(p.action.duration, p.agent_index) for p in matching
                 if p.action.status == action.status and p.action.duration is not None]
        if timed:
            dur, _ = _nearest_to_mean(timed)
            action = replace(action, duration=dur)
    elif winning_type == "type":
        norm = [(unicodedata.normalize("NFC", p.action.type_text), p.agent_index) for p in matching]
        _, source = _frequency_winner(norm)
        action = by_agent[source].action
    elif winning_type == "wait":
        _, source = _nearest_to_mean([(p.action.duration, p.agent_index) for p in matching])
        action = by_agent[source].action
    else:
        raise ValueError(f"unknown action type {winning_type!r}")

    chosen = by_agent[source]
    if tally is None:
        tally = dict(Counter(p.action.intent for p in proposals))
    return EnsembleDecision(action, source, chosen.thought, tally, chosen.request)


def decide(proposals: Sequence[Proposal]) -> EnsembleDecision:
    winner, tally = vote_action_type(proposals)
    return aggregate_parameters(winner, proposals, tally)


def decision_round_record(proposals: Sequence[Proposal], decision: EnsembleDecision) -> dict:
    """Loggable summary of one voting round."""
    return {
        "proposals": [p.to_dict() for p in proposals],
        "tally": dict(sorted(decision.vote_tally.items())),
        "decision": serialize_action(decision.action),
        "source_agent": decision.source_agent,
        "thought": decision.thought,
    }
