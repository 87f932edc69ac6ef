"""End-to-end perceive, reason, act loop on one simulated device.

Order of work for one instruction:

1. resolve personal-information slots into the context;
2. try the experience pool; on a hit, replay the stored actions;
3. otherwise loop: ensemble proposals -> vote -> click calibration ->
   execute, until a ``finish``/``impossible`` status or the step cap.
   ``need_feedback`` pauses the loop and asks the scripted responder.

Latency is simulated on the world clock: every perception costs
``perception_ticks``, every policy round ``policy_ticks`` (agents are
queried in parallel, so one round costs one call), every action
``action_ticks`` and every function call ``call_ticks``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from ..actions import Action, serialize_action
from ..calibration import CORRECTED, correct_point, record_failure
from ..dispatch import FUNCTION_CALL, GUI, plan_path
from ..ensemble import decide
from ..errors import NothingMatched, PolicyFault, ToolFault, UnknownField
from ..experience import SUCCESS, ExperienceEntry, replay
from ..policy import ScriptedPolicy, StepContext, spawn_ensemble
from ..screen import digest_hex, hash_screen
from .world import DeviceEnv, World, current_digest, render, reset_device, step_device

FINISH = "finish"
IMPOSSIBLE = "impossible"


@dataclass
class PipelineConfig:
    ensemble: int = 1
    jitter: Optional[int] = None  # None: 0 for a single agent, 15 for an ensemble
    step_cap: int = 30
    policy_ticks: int = 5
    action_ticks: int = 1
    call_ticks: int = 1
    perception_ticks: int = 3
    use_experience: bool = True
    validated_replay: bool = True
    calibrate: bool = True
    archive: bool = True
    reset: bool = False  # start from the device's home screen
    function: Optional[str] = None
    params: dict = field(default_factory=dict)

    @property
    def agent_jitter(self) -> int:
        if self.jitter is not None:
            return self.jitter
        return 15 if self.ensemble > 1 else 0


@dataclass
class TraceLog:
    header: dict
    steps: list[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "run", **self.header}, ensure_ascii=False, sort_keys=True)]
        lines += [json.dumps({"kind": "step", **s}, ensure_ascii=False, sort_keys=True) for s in self.steps]
        return "\n".join(lines) + "\n"

    def verify_chain(self) -> bool:
        """Each step's pre-digest equals the previous step's post-digest."""
        for prev, cur in zip(self.steps, self.steps[1:]):
            if cur["digest"] != prev["post_digest"]:
                return False
        return all((s["digest"] != s["post_digest"]) == s["state_changed"] for s in self.steps)


@dataclass
class RunResult:
    status: str
    trace: TraceLog
    route: str
    policy_invocations: int
    ticks: int
    error: Optional[str] = None
    entry: Optional[ExperienceEntry] = None
    context: dict = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.status == FINISH


def respond_feedback(script: Mapping, request: Optional[str], store=None) -> Optional[str]:
    """Scripted human reply to a need-feedback pause, or ``None`` to decline.

    A script value may be a single reply or a list of successive replies.
    When the request names a stored field (``relation.field``), a reply that
    fails the field pattern triggers one re-prompt; a second failure declines.
    Accepted replies to such requests are written to ``store``.
    """
    if request is None or request not in script:
        return None
    replies = script[request]
    if isinstance(replies, str):
        replies = [replies]
    spec = None
    if store is not None and "." in request:
        r, f = request.split(".", 1)
        try:
            spec = store.field_spec(f)
        except UnknownField:
            spec = None
    if spec is None:
        return replies[0] if replies else None
    for reply in replies[:2]:
        if spec.validate(reply):
            store.update((r, f, reply))
            return reply
    return None


def _script_steps(world: World, device_id: str, instruction: str) -> list:
    steps = world.script_for(device_id, instruction)
    return steps if steps is not None else []


def run_pipeline(
    world: World,
    device_id: str,
    instruction: str,
    config: Optional[PipelineConfig] = None,
    extra_context: Optional[Mapping] = None,
    policies=None,
) -> RunResult:
    if not instruction or not instruction.strip():
        raise ValueError("instruction must be non-empty")
    config = config or PipelineConfig()
    world.device(device_id)
    if config.reset:
        reset_device(world, device_id)
    run_no = world.runs
    world.runs += 1
    start_tick = world.clock.now
    calls_before = world.policy_calls
    trace = TraceLog({"run": run_no, "scenario": world.name, "device": device_id, "instruction": instruction, "start_tick": start_tick})
    if config.reset:
        trace.header["reset"] = True
    memory = world.memory

    screen = render(world, device_id)
    ctx_info = memory.inject_context(instruction, screen=screen)
    context = dict(ctx_info.values)
    context.update(extra_context or {})
    unresolved = list(ctx_info.unresolved)

    def finish(status: str, route: str, error: Optional[str] = None, entry=None) -> RunResult:
        ticks = world.clock.now - start_tick
        trace.header.update(status=status, route=route, end_tick=world.clock.now, ticks=ticks,
                            steps=len(trace.steps), error=error)
        trace.header["hit"] = route == "replay" or trace.header.get("hit", False)
        return RunResult(status, trace, route, world.policy_calls - calls_before, ticks, error, entry, context)

    # ---- function route ----
    route = plan_path({"function": config.function, "params": config.params}, world.registry)
    if route.kind == FUNCTION_CALL:
        digest = current_digest(world, device_id)
        tick = world.clock.now
        try:
            out = step_device(world, device_id, route.call, config.call_ticks)
            status, error, result = FINISH, None, out.result
            changed, post = out.state_changed, hash_screen(out.screen)
        except ToolFault as exc:
            world.clock.advance(config.call_ticks)
            status, error, result, changed, post = IMPOSSIBLE, str(exc), None, False, digest
        trace.steps.append({
            "tick": tick, "device": device_id, "route": FUNCTION_CALL, "digest": digest_hex(digest),
            "post_digest": digest_hex(post), "proposals": [], "decision": None, "calibration": None,
            "executed": route.call.record(), "result": result, "state_changed": changed,
        })
        return finish(status, FUNCTION_CALL, error)

    # ---- experience replay ----
    pool = world.pool(device_id)
    if config.use_experience:
        entry = pool.match(instruction)
        if entry is not None:
            trace.header["hit"] = True
            env = DeviceEnv(world, device_id, config.action_ticks,
                            config.perception_ticks if config.validated_replay else 0)
            counter = lambda: world.policy_calls  # noqa: E731
            res = replay(entry, env, validated=config.validated_replay, policy_counter=counter)
            for tick, before, action, out in env.executed:
                trace.steps.append({
                    "tick": tick, "device": device_id, "route": "replay", "digest": digest_hex(before),
                    "post_digest": digest_hex(hash_screen(out.screen)), "proposals": [], "decision": None,
                    "calibration": None, "executed": serialize_action(action),
                    "state_changed": out.state_changed,
                })
            trace.header["replay"] = res.outcome
            if res.completed:
                return finish(FINISH, "replay")
            # diverged: fall through to the standard pipeline from the current state

    # ---- standard pipeline ----
    if policies is None:
        steps = _script_steps(world, device_id, instruction)
        seeds = [world.seed * 1000 + i for i in range(config.ensemble)]
        jitter = config.agent_jitter
        policies = spawn_ensemble(
            lambda agent_index, seed: ScriptedPolicy(steps, agent_index, seed, jitter),
            config.ensemble, seeds,
        )
    history: list = []
    executed: list[tuple[int, Action]] = []
    fm = world.failure_memory
    for step_no in range(config.step_cap):
        world.clock.advance(config.perception_ticks)
        screen = render(world, device_id)
        digest = hash_screen(screen)
        for key in list(unresolved):
            r, f = key.split(".", 1)
            try:
                context[key] = memory.capture_from_screen((r, f), screen)
                unresolved.remove(key)
            except NothingMatched:
                pass
        sctx = StepContext(instruction, dict(context), list(history), screen)
        try:
            proposals = [p.propose(sctx) for p in policies]
        except PolicyFault as exc:
            return finish(IMPOSSIBLE, "standard", f"PolicyFault: {exc}")
        world.policy_calls += len(policies)
        world.clock.advance(config.policy_ticks)
        decision = decide(proposals)
        action = decision.action
        calibration = None
        if config.calibrate and action.intent == "click":
            outcome = correct_point(action.point, screen, fm, digest)
            calibration = outcome
            action = replace(action, point=outcome.final_point)
        tick = world.clock.now
        feedback = None
        if action.status == "need_feedback":
            reply = respond_feedback(world.feedback, decision.request, memory)
            feedback = {"request": decision.request, "reply": reply}
            if reply is not None and decision.request:
                context[decision.request] = reply
                if decision.request in unresolved:
                    unresolved.remove(decision.request)
        out = step_device(world, device_id, action, config.action_ticks)
        post = hash_screen(out.screen)
        if calibration is not None and calibration.verdict == CORRECTED and not out.state_changed:
            record_failure(fm, digest, calibration.final_point)
        rec = {
            "tick": tick, "device": device_id, "route": GUI, "digest": digest_hex(digest),
            "post_digest": digest_hex(post),
            "proposals": [p.to_dict() for p in proposals], "decision": decision.to_dict(),
            "calibration": calibration.to_dict() if calibration else None,
            "executed": serialize_action(action), "state_changed": out.state_changed,
        }
        if feedback is not None:
            rec["feedback"] = feedback
        trace.steps.append(rec)
        history.append((digest, action))
        if action.status != "need_feedback":
            executed.append((digest, action))
        if action.intent == "status" and action.status == FINISH:
            entry = ExperienceEntry(instruction, SUCCESS, tuple(executed), start_tick, world.clock.now)
            if config.archive:
                pool.archive(entry)
            return finish(FINISH, "standard", entry=entry)
        if action.intent == "status" and action.status == IMPOSSIBLE:
            return finish(IMPOSSIBLE, "standard", decision.thought or None)
        if action.status == "need_feedback" and feedback["reply"] is None:
            return finish(IMPOSSIBLE, "standard", f"feedback declined: {decision.request}")
    return finish(IMPOSSIBLE, "standard", "StepCapExceeded")


def read_traces(text: str) -> list[TraceLog]:
    """Split a JSON-lines file into traces; lines of other kinds are ignored."""
    traces: list[TraceLog] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec.pop("kind", None)
        if kind == "run":
            traces.append(TraceLog(rec))
        elif kind == "step":
            if not traces:
                raise ValueError("step record before any run header")
            traces[-1].steps.append(rec)
    return traces


def reexecute(world: World, trace: TraceLog) -> bool:
    """Re-simulate the executed actions of ``trace`` on ``world``.

    Returns True when every recorded pre/post digest is reproduced.  A trace
    whose header carries ``reset`` starts from the device's home screen.
    """
    from ..actions import parse_action
    from ..dispatch import BoundCall

    device = trace.header["device"]
    if trace.header.get("reset"):
        reset_device(world, device)
    for s in trace.steps:
        if digest_hex(current_digest(world, device)) != s["digest"]:
            return False
        ex = s["executed"]
        action = BoundCall(ex["CALL"], ex["ARGS"], {}) if isinstance(ex, dict) else parse_action(ex)
        try:
            out = step_device(world, device, action)
        except ToolFault:
            continue
        if digest_hex(hash_screen(out.screen)) != s["post_digest"]:
            return False
    return True
