"""Pluggable decision sources standing in for the multimodal model.

``ScriptedPolicy`` walks a list of intents.  Each intent has a screen
predicate (``match``) and an action template (``emit``).  On every call the
policy scans forward from its cursor for the first intent whose predicate
holds on the current screen and emits it.

Predicate language::

    {}                         always true
    {"content": "Pay"}         some widget's content equals "Pay"
    {"contains": "Pay"}        some widget's content contains "Pay"
    {"screen": "app/screen"}   the screen id equals the value
    {"all": [p, ...]}, {"any": [p, ...]}, {"not": p}

Action templates are compact records.  ``POINT`` and coordinate ``to`` may
name a widget instead of a point (``{"widget": "YouTube"}`` or
``{"widget_contains": "You"}``) and resolve to its centre.  ``TYPE`` text may
hold ``{key}`` placeholders filled from the step context.  Placeholder keys
and any keys listed under ``requires`` must be present in the context, or
the policy asks for them with ``STATUS need_feedback``.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Protocol, Sequence

from .actions import Action, action_from_record, parse_action
from .ensemble import Proposal
from .errors import ActionError, PolicyFault
from .screen import Screen


@dataclass
class StepContext:
    instruction: str
    context: dict = field(default_factory=dict)
    history: list = field(default_factory=list)  # (digest, executed Action)
    screen: Screen = field(default_factory=Screen)


class Policy(Protocol):
    agent_index: int
    invocations: int

    def propose(self, ctx: StepContext) -> Proposal: ...


def matches(pred: Optional[Mapping], screen: Screen) -> bool:
    if not pred:
        return True
    if "all" in pred:
        return all(matches(p, screen) for p in pred["all"])
    if "any" in pred:
        return any(matches(p, screen) for p in pred["any"])
    if "not" in pred:
        return not matches(pred["not"], screen)
    ok = True
    if "content" in pred:
        ok = ok and any(w.content == pred["content"] for w in screen.widgets)
    if "contains" in pred:
        ok = ok and any(pred["contains"] in w.content for w in screen.widgets)
    if "screen" in pred:
        ok = ok and screen.screen_id == pred["screen"]
    return ok


_PLACEHOLDER = re.compile(r"\{([^{}]+)\}")


def placeholders(text: str) -> list[str]:
    return _PLACEHOLDER.findall(text)


def fill(text: str, values: Mapping) -> str:
    return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), text)


def _clamp(v: int) -> int:
    return min(max(v, 0), 1000)


class ScriptedPolicy:
    """Deterministic script follower; ``jitter`` adds seeded coordinate noise."""

    def __init__(self, steps: Sequence[Mapping], agent_index: int = 0, seed: int = 0, jitter: int = 0):
        self.steps = [dict(s) for s in steps]
        self.agent_index = agent_index
        self.seed = seed
        self.jitter = jitter
        self.rng = random.Random(seed)
        self.cursor = 0
        self.invocations = 0

    def reset(self) -> None:
        self.cursor = 0
        self.rng = random.Random(self.seed)

    def _resolve_point(self, spec, screen: Screen):
        if isinstance(spec, Mapping):
            target = None
            if "widget" in spec:
                target = screen.find(spec["widget"])
            elif "widget_contains" in spec:
                target = next((w for w in screen.widgets if spec["widget_contains"] in w.content), None)
            if target is None:
                raise PolicyFault(f"template widget {spec} not on screen {screen.screen_id!r}")
            x, y = target.center
        else:
            x, y = spec
        if self.jitter:
            x = _clamp(x + self.rng.randint(-self.jitter, self.jitter))
            y = _clamp(y + self.rng.randint(-self.jitter, self.jitter))
        return [x, y]

    def propose(self, ctx: StepContext) -> Proposal:
        self.invocations += 1
        for i in range(self.cursor, len(self.steps)):
            if matches(self.steps[i].get("match"), ctx.screen):
                break
        else:
            return Proposal(self.agent_index, Action(status="impossible"), "script exhausted")
        step = self.steps[i]
        emit = dict(step["emit"])
        needed = list(step.get("requires", []))
        if isinstance(emit.get("TYPE"), str):
            needed += placeholders(emit["TYPE"])
        missing = [k for k in needed if k not in ctx.context]
        if missing:
            return Proposal(self.agent_index, Action(status="need_feedback"),
                            f"need user input: {missing[0]}", request=missing[0])
        if "POINT" in emit:
            emit["POINT"] = self._resolve_point(emit["POINT"], ctx.screen)
        if isinstance(emit.get("to"), (Mapping, list)):
            emit["to"] = self._resolve_point(emit["to"], ctx.screen)
        if isinstance(emit.get("TYPE"), str):
            emit["TYPE"] = fill(emit["TYPE"], ctx.context)
        try:
            action = action_from_record(emit)
        except ActionError as exc:
            raise PolicyFault(f"script step {i} emits an invalid action: {exc}") from exc
        self.cursor = i + 1
        return Proposal(self.agent_index, action, step.get("thought", ""))


def stochastic_policy(steps: Sequence[Mapping], agent_index: int = 0, seed: int = 0) -> ScriptedPolicy:
    """Scripted targets with uniform +-15 per-mille jitter."""
    return ScriptedPolicy(steps, agent_index, seed, jitter=15)


class RemotePolicy:
    """Adapter for a model served elsewhere.

    ``transport`` receives a request dict (instruction, context, history,
    widgets) and returns the model's reply: a compact action record, or an
    object ``{"action": <record>, "thought": str}``.
    """

    def __init__(self, transport: Callable[[dict], str], agent_index: int = 0):
        self.transport = transport
        self.agent_index = agent_index
        self.invocations = 0

    def request(self, ctx: StepContext) -> dict:
        return {
            "instruction": ctx.instruction,
            "context": dict(ctx.context),
            "history": [[f"{d:016x}", str(a)] for d, a in ctx.history],
            "widgets": [w.to_dict() for w in ctx.screen.widgets],
        }

    def propose(self, ctx: StepContext) -> Proposal:
        self.invocations += 1
        try:
            reply = self.transport(self.request(ctx))
            thought = ""
            doc = json.loads(reply)
            if isinstance(doc, dict) and "action" in doc:
                thought = str(doc.get("thought", ""))
                rec = doc["action"]
                action = parse_action(rec) if isinstance(rec, str) else action_from_record(rec)
            else:
                action = parse_action(reply)
        except (ActionError, ValueError, TypeError) as exc:
            raise PolicyFault(f"remote policy returned an invalid action: {exc}") from exc
        except PolicyFault:
            raise
        except Exception as exc:
            raise PolicyFault(f"remote policy failed: {exc}") from exc
        return Proposal(self.agent_index, action, thought)


def spawn_ensemble(factory: Callable[..., Policy], n: int, seeds: Sequence[int]) -> list[Policy]:
    """``n`` independent policies built by ``factory(agent_index=i, seed=s)``."""
    if n < 1:
        raise ValueError("ensemble needs at least one agent")
    if len(seeds) < n:
        raise ValueError("need one seed per agent")
    return [factory(agent_index=i, seed=seeds[i]) for i in range(n)]
