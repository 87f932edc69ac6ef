"""Deterministic simulated devices whose apps are graphs of screens.

Scenario file layout (JSON)::

    {
      "name": "...", "seed": 7,
      "apps": {
        "<app>": {
          "initial": "<screen>",
          "screens": {"<screen>": {"widgets": [<widget fixture>...], "autofocus": 3}},
          "transitions": {"<screen>": {"<trigger>": "<target>"}}
        }
      },
      "devices": [{"id": "phone", "apps": ["launcher", "youtube"], "home": "launcher"}],
      "tools": {"catalog": [...], "faults": []},
      "scripts": [{"device": "phone", "instruction": "...", "steps": [...]}],
      "feedback": {"<request key>": "<reply>" | ["<reply>", "<retry reply>"]},
      "memory": [{"r": "self", "f": "phone_number", "v": "139..."}],
      "plan": {<plan file>, "outputs": {"<subtask>": {"key": "...", "pattern": "..."}}},
      "default_instruction": "..."
    }

Widget fixtures use unit-interval bboxes, exactly as produced upstream.

Triggers: ``click:<index>``, ``longpress:<index>``, ``type:<index>`` (any
text), ``type:<index>=<full field text>``, ``press:ENTER`` and
``swipe:<up|down|left|right>``.  A target is ``<screen>`` in the same app,
``<app>/<screen>``, or ``<app>/`` for the app's initial screen.

A focused input field is rendered with widget type ``input_field:focused``
and shows its typed text in place of its placeholder, so focusing or typing
changes the screen digest.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from ..actions import Action
from ..calibration import FailureMemory
from ..dispatch import BoundCall, Registry, ToolEnv, default_registry, execute
from ..errors import DanglingReference, NoSuchDevice, SchemaError
from ..experience import ExperiencePool
from ..memory import PersonalStore
from ..screen import Screen, WidgetRecord, hash_screen, hit_test, ingest_widgets

FOCUSED_SUFFIX = ":focused"


class Clock:
    """Shared logical clock; every increment is serialized through ``advance``."""

    def __init__(self, start: int = 0):
        self.now = start

    def advance(self, n: int = 1) -> int:
        self.now += n
        return self.now

    def tick(self) -> int:
        return self.advance(1)


@dataclass
class SimApp:
    app_id: str
    screens: dict[str, Screen]
    transitions: dict[tuple[str, str], str]
    initial: str
    autofocus: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Clear:
    """Empty the focused input field (the CLEAR operation)."""


@dataclass
class StepOutcome:
    screen: Screen
    state_changed: bool
    result: Optional[dict] = None


@dataclass
class SimDevice:
    device_id: str
    apps: list[str]
    home: str
    foreground: tuple[str, str] = ("", "")
    back_stack: list = field(default_factory=list)
    back_limit: int = 16
    focus: Optional[tuple[str, str, int]] = None
    fields: dict = field(default_factory=dict)
    mailbox: list = field(default_factory=list)


@dataclass
class World:
    name: str
    seed: int
    apps: dict[str, SimApp]
    devices: dict[str, SimDevice]
    tools: ToolEnv
    registry: Registry
    scripts: list[dict]
    feedback: dict
    memory: PersonalStore
    clock: Clock
    failure_memory: FailureMemory = field(default_factory=FailureMemory)
    pools: dict[str, ExperiencePool] = field(default_factory=dict)
    plan_doc: Optional[dict] = None
    default_instruction: Optional[str] = None
    policy_calls: int = 0
    runs: int = 0

    def device(self, device_id: str) -> SimDevice:
        try:
            return self.devices[device_id]
        except KeyError:
            raise NoSuchDevice(f"no device {device_id!r}") from None

    def pool(self, device_id: str) -> ExperiencePool:
        return self.pools.setdefault(device_id, ExperiencePool())

    def script_for(self, device_id: str, instruction: str) -> Optional[list]:
        from ..experience import normalize_query

        want = normalize_query(instruction)
        for s in self.scripts:
            if s.get("device", device_id) == device_id and normalize_query(s["instruction"]) == want:
                return s["steps"]
        return None


# ---- rendering and stepping ----


def render(world: World, device_id: str) -> Screen:
    dev = world.device(device_id)
    app_id, screen_id = dev.foreground
    base = world.apps[app_id].screens[screen_id]
    widgets = []
    for w in base.widgets:
        if w.widget_type.startswith("input_field"):
            key = (app_id, screen_id, w.index)
            text = dev.fields.get(key, "")
            w = replace(w, content=text or w.content)
            if dev.focus == key:
                w = replace(w, widget_type=w.widget_type + FOCUSED_SUFFIX)
        widgets.append(w)
    return Screen(tuple(widgets), f"{app_id}/{screen_id}")


def current_digest(world: World, device_id: str) -> int:
    return hash_screen(render(world, device_id))


def _goto(world: World, dev: SimDevice, target: str, push: bool = True) -> None:
    app_id, screen_id = dev.foreground
    if "/" in target:
        app_id, screen_id = target.split("/", 1)
        if not screen_id:
            screen_id = world.apps[app_id].initial
    else:
        screen_id = target
    if push:
        dev.back_stack.append(dev.foreground)
        if len(dev.back_stack) > dev.back_limit:
            del dev.back_stack[0]
    dev.foreground = (app_id, screen_id)
    # a fresh visit starts with empty inputs; BACK keeps what was typed
    for key in [k for k in dev.fields if k[:2] == (app_id, screen_id)]:
        del dev.fields[key]
    af = world.apps[app_id].autofocus.get(screen_id)
    dev.focus = (app_id, screen_id, af) if af is not None else None


def _transition(world: World, dev: SimDevice, trigger: str) -> Optional[str]:
    app_id, screen_id = dev.foreground
    return world.apps[app_id].transitions.get((screen_id, trigger))


def _touched(screen: Screen, point) -> Optional[WidgetRecord]:
    hits = hit_test(screen, point)
    if not hits:
        return None
    # most specific widget wins; later widgets are drawn on top
    return min(hits, key=lambda w: (w.area, -w.index))


def _swipe_direction(action: Action) -> str:
    if isinstance(action.to, str):
        return action.to
    dx = action.to[0] - action.point[0]
    dy = action.to[1] - action.point[1]
    if abs(dx) >= abs(dy):
        return "right" if dx > 0 else "left"
    return "down" if dy > 0 else "up"


def _apply(world: World, dev: SimDevice, action) -> None:
    app_id, screen_id = dev.foreground
    if isinstance(action, Clear):
        if dev.focus and dev.focus[:2] == (app_id, screen_id):
            dev.fields[dev.focus] = ""
        return
    intent = action.intent
    screen = render(world, dev.device_id)
    if intent == "click":
        w = _touched(screen, action.point)
        if w is None:
            return
        if w.widget_type.startswith("input_field"):
            dev.focus = (app_id, screen_id, w.index)
        target = _transition(world, dev, f"click:{w.index}")
        if target:
            _goto(world, dev, target)
    elif intent == "long_press":
        w = _touched(screen, action.point)
        if w is not None:
            target = _transition(world, dev, f"longpress:{w.index}")
            if target:
                _goto(world, dev, target)
    elif intent == "swipe":
        target = _transition(world, dev, f"swipe:{_swipe_direction(action)}")
        if target:
            _goto(world, dev, target)
    elif intent == "type":
        if dev.focus is None or dev.focus[:2] != (app_id, screen_id):
            return
        idx = dev.focus[2]
        dev.fields[dev.focus] = dev.fields.get(dev.focus, "") + action.type_text
        target = _transition(world, dev, f"type:{idx}={dev.fields[dev.focus]}") or _transition(world, dev, f"type:{idx}")
        if target:
            _goto(world, dev, target)
    elif intent == "press":
        if action.press == "BACK":
            if dev.back_stack:
                dev.foreground = dev.back_stack.pop()
                af = world.apps[dev.foreground[0]].autofocus.get(dev.foreground[1])
                dev.focus = (*dev.foreground, af) if af is not None else None
        elif action.press == "HOME":
            home = (dev.home, world.apps[dev.home].initial)
            if dev.foreground != home or dev.back_stack:
                dev.back_stack.clear()
                dev.foreground = home
                dev.focus = None
        elif action.press == "ENTER":
            target = _transition(world, dev, "press:ENTER")
            if target:
                _goto(world, dev, target)
    # status reports and waits leave the device untouched


def step_device(world: World, device_id: str, action: Union[Action, BoundCall, Clear], ticks: int = 1) -> StepOutcome:
    """Execute one action (or function call) on a device and advance the clock."""
    dev = world.device(device_id)
    before = current_digest(world, device_id)
    result = None
    if isinstance(action, BoundCall):
        result = execute(action, world.tools)
    else:
        _apply(world, dev, action)
    world.clock.advance(ticks)
    screen = render(world, device_id)
    return StepOutcome(screen, hash_screen(screen) != before, result)


def reset_device(world: World, device_id: str) -> None:
    """Return a device to its home screen with no history, focus or typed text."""
    dev = world.device(device_id)
    dev.foreground = (dev.home, world.apps[dev.home].initial)
    dev.back_stack.clear()
    dev.focus = None
    dev.fields.clear()


class DeviceEnv:
    """Replay environment bound to one device of a world."""

    def __init__(self, world: World, device_id: str, action_ticks: int = 1, perception_ticks: int = 0):
        self.world = world
        self.device_id = device_id
        self.action_ticks = action_ticks
        self.perception_ticks = perception_ticks
        self.executed: list = []

    def current_digest(self) -> int:
        if self.perception_ticks:
            self.world.clock.advance(self.perception_ticks)
        return current_digest(self.world, self.device_id)

    def execute(self, action: Action) -> bool:
        before = current_digest(self.world, self.device_id)
        tick = self.world.clock.now
        out = step_device(self.world, self.device_id, action, self.action_ticks)
        self.executed.append((tick, before, action, out))
        return out.state_changed


# ---- loading ----


def _load_doc(source) -> dict:
    if isinstance(source, Mapping):
        return copy.deepcopy(dict(source))
    text = str(source)
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    bundled = resources.files("guikernel.scenarios").joinpath(f"{text}.json")
    if bundled.is_file():
        return json.loads(bundled.read_text(encoding="utf-8"))
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    raise SchemaError(f"no scenario file or bundled scenario named {text!r}")


def bundled_scenarios() -> list[str]:
    root = resources.files("guikernel.scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _build_app(app_id: str, doc: Mapping) -> SimApp:
    try:
        screens = {
            sid: ingest_widgets(sdoc.get("widgets", []), f"{app_id}/{sid}")
            for sid, sdoc in doc["screens"].items()
        }
        autofocus = {sid: sdoc["autofocus"] for sid, sdoc in doc["screens"].items() if sdoc.get("autofocus") is not None}
        initial = doc["initial"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"app {app_id!r}: malformed definition ({exc})") from None
    transitions = {}
    for sid, table in doc.get("transitions", {}).items():
        for trig, target in table.items():
            transitions[(sid, trig)] = target
    if initial not in screens:
        raise DanglingReference(f"app {app_id!r}: initial screen {initial!r} does not exist")
    return SimApp(app_id, screens, transitions, initial, autofocus)


def _check_transitions(apps: dict[str, SimApp]) -> None:
    for app in apps.values():
        for (sid, trig), target in app.transitions.items():
            if sid not in app.screens:
                raise DanglingReference(f"{app.app_id}: transition from unknown screen {sid!r}")
            if "/" in target:
                a, s = target.split("/", 1)
                if a not in apps or (s and s not in apps[a].screens):
                    raise DanglingReference(f"{app.app_id}/{sid} {trig}: unknown target {target!r}")
            elif target not in app.screens:
                raise DanglingReference(f"{app.app_id}/{sid} {trig}: unknown target {target!r}")
        for sid, idx in app.autofocus.items():
            try:
                app.screens[sid].widget(idx)
            except KeyError:
                raise DanglingReference(f"{app.app_id}/{sid}: autofocus widget {idx} missing") from None


def load_world(source) -> World:
    """Build a fresh world from a scenario path, bundled name or dict."""
    doc = _load_doc(source)
    for key in ("apps", "devices"):
        if key not in doc:
            raise SchemaError(f"scenario lacks {key!r}")
    apps = {aid: _build_app(aid, adoc) for aid, adoc in doc["apps"].items()}
    _check_transitions(apps)
    devices = {}
    for ddoc in doc["devices"]:
        did = ddoc["id"]
        for a in ddoc.get("apps", []):
            if a not in apps:
                raise DanglingReference(f"device {did!r} lists unknown app {a!r}")
        home = ddoc.get("home", "launcher")
        if home not in apps:
            raise DanglingReference(f"device {did!r}: home app {home!r} does not exist")
        dev = SimDevice(did, list(ddoc.get("apps", [])), home, back_limit=int(ddoc.get("back_limit", 16)))
        dev.foreground = (home, apps[home].initial)
        devices[did] = dev
    for s in doc.get("scripts", []):
        if s.get("device") is not None and s["device"] not in devices:
            raise DanglingReference(f"script targets unknown device {s['device']!r}")
    clock = Clock()
    memory = PersonalStore(clock=clock.tick)
    for m in doc.get("memory", []):
        memory.update((m["r"], m["f"], m["v"]))
    tools_doc = doc.get("tools", {})
    world = World(
        name=doc.get("name", "scenario"),
        seed=int(doc.get("seed", 0)),
        apps=apps,
        devices=devices,
        tools=ToolEnv(tools_doc.get("catalog", []), tools_doc.get("faults", [])),
        registry=default_registry(),
        scripts=list(doc.get("scripts", [])),
        feedback=dict(doc.get("feedback", {})),
        memory=memory,
        clock=clock,
        plan_doc=doc.get("plan"),
        default_instruction=doc.get("default_instruction"),
    )
    if world.plan_doc:
        for ep in world.plan_doc.get("allocation", {}).values():
            kinds = {e["id"]: e["kind"] for e in world.plan_doc.get("endpoints", [])}
            if kinds.get(ep) == "device" and ep not in devices:
                raise DanglingReference(f"plan allocates to unknown device {ep!r}")
    return world
