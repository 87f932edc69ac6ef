"""Experience pool: archive successful trajectories and replay them verbatim.

Replay executes the recorded actions in order and never consults a policy.
In validated mode each step first compares the live screen digest with the
one recorded before that step, and stops at the first mismatch.
"""

from __future__ import annotations

import json
import re
import threading
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, Sequence

from .actions import Action, parse_action, serialize_action
from .errors import EnvFault, NonPositiveBaseline, NoQueriesYet

SUCCESS = "success"
FAILURE = "failure"
IN_PROGRESS = "in_progress"

ARCHIVED = "archived"
REJECTED = "rejected"


@dataclass(frozen=True)
class ExperienceEntry:
    query: str
    status: str
    actions: tuple[tuple[int, Action], ...]  # (digest before the action, action)
    start_tick: int = 0
    end_tick: int = 0

    @property
    def duration(self) -> int:
        return self.end_tick - self.start_tick

    @property
    def is_replayable(self) -> bool:
        return (
            self.status == SUCCESS
            and len(self.actions) > 0
            and self.actions[-1][1].status == "finish"
        )

    def to_jsonl(self) -> str:
        head = {"q": self.query, "S": self.status,
                "T": {"start": self.start_tick, "end": self.end_tick, "duration": self.duration}}
        lines = [json.dumps(head, ensure_ascii=False)]
        for digest, a in self.actions:
            lines.append(json.dumps({"digest": f"{digest:016x}", "action": serialize_action(a)}, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ExperienceEntry":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        steps = []
        for ln in lines[1:]:
            rec = json.loads(ln)
            steps.append((int(rec["digest"], 16), parse_action(rec["action"])))
        t = head.get("T", {})
        return cls(head["q"], head["S"], tuple(steps), t.get("start", 0), t.get("end", 0))


def normalize_query(q: str) -> str:
    q = unicodedata.normalize("NFC", q).lower()
    q = "".join(" " if unicodedata.category(ch).startswith("P") else ch for ch in q)
    return " ".join(q.split())


def jaccard(a: str, b: str) -> float:
    ta, tb = set(normalize_query(a).split()), set(normalize_query(b).split())
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def default_matcher(stored: str, current: str, threshold: float = 0.9) -> bool:
    """Exact normalized equality, or token-set Jaccard similarity >= ``threshold``."""
    return normalize_query(stored) == normalize_query(current) or jaccard(stored, current) >= threshold


Matcher = Callable[[str, str], bool]


class ExperiencePool:
    def __init__(self):
        self.entries: list[ExperienceEntry] = []
        self.n_total = 0
        self.n_hit = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.entries)

    def archive(self, entry: ExperienceEntry) -> str:
        if not entry.is_replayable:
            return REJECTED
        with self._lock:
            self.entries.append(entry)
        return ARCHIVED

    def match(self, q_current: str, matcher: Matcher = default_matcher) -> Optional[ExperienceEntry]:
        """Newest-first scan; the first entry the matcher accepts is a hit."""
        with self._lock:
            self.n_total += 1
            for entry in reversed(self.entries):
                if matcher(entry.query, q_current):
                    self.n_hit += 1
                    return entry
        return None

    def hit_rate(self) -> float:
        if self.n_total == 0:
            raise NoQueriesYet("hit rate undefined before the first query")
        return self.n_hit / self.n_total

    def to_jsonl(self) -> str:
        return "".join(e.to_jsonl() for e in self.entries)


def hit_rate(pool: ExperiencePool) -> float:
    return pool.hit_rate()


class ReplayEnv(Protocol):
    def current_digest(self) -> int: ...

    def execute(self, action: Action) -> bool: ...


@dataclass
class ReplayResult:
    completed: bool
    steps_executed: int
    diverged_at: Optional[int] = None
    final_digest: Optional[int] = None
    policy_invocations: int = 0

    @property
    def outcome(self) -> str:
        return "completed" if self.completed else f"diverged at {self.diverged_at}"


def replay(entry: ExperienceEntry, env: ReplayEnv, validated: bool = True,
           policy_counter: Optional[Callable[[], int]] = None) -> ReplayResult:
    """Execute ``entry.actions`` in order against ``env``.

    ``policy_counter``, when given, reads the environment's policy-call count
    so the result can report how many calls happened during replay (0 unless
    something outside the replay path interfered).
    """
    before = policy_counter() if policy_counter else 0
    done = 0
    for i, (digest, action) in enumerate(entry.actions):
        try:
            if validated and env.current_digest() != digest:
                after = policy_counter() if policy_counter else 0
                return ReplayResult(False, done, i, env.current_digest(), after - before)
            env.execute(action)
        except EnvFault:
            raise
        except Exception as exc:
            raise EnvFault(f"replay step {i} failed: {exc}") from exc
        done += 1
    after = policy_counter() if policy_counter else 0
    return ReplayResult(True, done, None, env.current_digest(), after - before)


def efficiency_gain(t_std: float, t_replay: float) -> float:
    if t_std <= 0:
        raise NonPositiveBaseline("baseline time must be positive")
    if t_replay < 0:
        raise ValueError("replay time must be non-negative")
    return 1.0 - t_replay / t_std
