"""Asynchronous cross-device execution of an allocated plan.

Every subtask runs as a full pipeline on its endpoint's device, with the
subtask description as the instruction.  When a subtask completes, its
payload (the values it inherited plus any ``outputs`` it captured from its
final screen) is delivered over the bus to the endpoint of each successor
that lives elsewhere.  Successors on the same endpoint inherit it locally.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..errors import ExecutorError, UnknownEndpoint
from ..planner import AllocatedPlan, PlanResult, load_plan, run_plan
from .pipeline import PipelineConfig, RunResult, TraceLog, run_pipeline
from .world import World, render


@dataclass
class Message:
    tick: int
    sender: str
    receiver: str
    subtask: str
    payload: dict

    def to_dict(self) -> dict:
        return {"tick": self.tick, "from": self.sender, "to": self.receiver,
                "subtask": self.subtask, "payload": self.payload}


class Bus:
    """Reliable, ordered delivery; each message is stamped from the world clock."""

    def __init__(self, world: World):
        self.world = world
        self.log: list[Message] = []

    def send(self, sender: str, receiver: str, subtask: str, payload: Mapping) -> Message:
        msg = Message(self.world.clock.tick(), sender, receiver, subtask, dict(payload))
        self.log.append(msg)
        self.world.device(receiver).mailbox.append(msg)
        return msg

    def delivered(self, subtask: str) -> list[Message]:
        return [m for m in self.log if m.subtask == subtask]

    def log_jsonl(self) -> str:
        return "".join(json.dumps(m.to_dict(), sort_keys=True, ensure_ascii=False) + "\n" for m in self.log)


@dataclass
class CrossDeviceResult:
    plan_result: PlanResult
    bus: Bus
    traces: dict[str, list[TraceLog]] = field(default_factory=dict)
    runs: dict[str, RunResult] = field(default_factory=dict)
    payloads: dict[str, dict] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.plan_result.status

    def event_log_jsonl(self) -> str:
        return self.plan_result.log_jsonl() + self.bus.log_jsonl()


def plan_from_world(world: World) -> AllocatedPlan:
    if not world.plan_doc:
        raise ValueError(f"scenario {world.name!r} has no plan")
    return load_plan(world.plan_doc)


def _capture(world: World, device_id: str, spec: Mapping) -> dict:
    pattern = re.compile(spec["pattern"])
    for w in render(world, device_id).widgets:
        m = pattern.search(w.content)
        if m:
            return {spec["key"]: m.group(1) if m.groups() else m.group(0)}
    return {}


def run_cross_device(
    world: World,
    plan: Optional[AllocatedPlan] = None,
    config: Optional[PipelineConfig] = None,
    kill: Optional[tuple[str, str]] = None,
) -> CrossDeviceResult:
    """Run ``plan`` (default: the world's own plan) to quiescence.

    ``kill=(endpoint, subtask)`` makes that endpoint's executor fault when
    it reaches the subtask, which fails it and skips its descendants.
    For app-endpoint plans every subtask runs on the single device named by
    the plan document's ``device`` key (or the world's only device).
    """
    plan = plan or plan_from_world(world)
    config = config or PipelineConfig()
    outputs = (world.plan_doc or {}).get("outputs", {})
    if plan.is_cross_app:
        device_of = (world.plan_doc or {}).get("device") or next(iter(world.devices))
        resolve = lambda ep: device_of  # noqa: E731
    else:
        for ep in plan.endpoints:
            if ep not in world.devices:
                raise UnknownEndpoint(f"plan endpoint {ep!r} is not a device in {world.name!r}")
        resolve = lambda ep: ep  # noqa: E731

    bus = Bus(world)
    result = CrossDeviceResult(None, bus)  # type: ignore[arg-type]
    graph = plan.graph

    def inherited(sid: str, device_id: str) -> dict:
        ctx: dict = {}
        local = resolve(plan.endpoint(sid))
        for p in graph.predecessors(sid):
            if resolve(plan.endpoint(p)) == local:
                ctx.update(result.payloads.get(p, {}))
        for msg in world.device(device_id).mailbox:
            if msg.subtask in graph.predecessors(sid):
                ctx.update(msg.payload)
        return ctx

    def executor(sid: str) -> bool:
        ep = plan.endpoint(sid)
        if kill is not None and kill == (ep, sid):
            raise ExecutorError(f"endpoint {ep} killed at {sid}")
        device_id = resolve(ep)
        ctx = inherited(sid, device_id)
        run = run_pipeline(world, device_id, graph.description(sid), config, extra_context=ctx)
        result.runs[sid] = run
        result.traces.setdefault(device_id, []).append(run.trace)
        if run.succeeded and sid in outputs:
            ctx.update(_capture(world, device_id, outputs[sid]))
        result.payloads[sid] = ctx
        return run.succeeded

    def on_complete(sid: str, _status) -> None:
        src = resolve(plan.endpoint(sid))
        receivers = []
        for succ in graph.successors(sid):
            dst = resolve(plan.endpoint(succ))
            if dst != src and dst not in receivers:
                receivers.append(dst)
        for dst in receivers:
            bus.send(src, dst, sid, result.payloads.get(sid, {}))

    result.plan_result = run_plan(plan, executor, clock=world.clock.tick, on_complete=on_complete)
    return result
