"""Hybrid action space: GUI operations plus user-selected function calls.

Function calls are never chosen by the model.  A task either names a
registered function explicitly (function route) or falls back to GUI
automation (GUI route).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional

from .errors import DuplicateName, MissingRequiredParam, ToolFault, UnknownFunction, UnknownParam

_NO_DEFAULT = object()


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str = "string"
    required: bool = True
    default: Any = None

    def __post_init__(self) -> None:
        if self.required and self.default is not None:
            raise ValueError(f"required parameter {self.name!r} cannot carry a default")


@dataclass(frozen=True)
class FunctionDescriptor:
    name: str
    params: tuple[ParamSpec, ...] = ()
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.name}: duplicate parameter names")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": [
                {"name": p.name, "type": p.type, "required": p.required, "default": p.default}
                for p in self.params
            ],
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FunctionDescriptor":
        params = tuple(
            ParamSpec(p["name"], p.get("type", "string"), bool(p.get("required", True)), p.get("default"))
            for p in d.get("params", [])
        )
        return cls(d["name"], params, d.get("description", ""))


USER = "user_supplied"
DEFAULTED = "defaulted"


@dataclass(frozen=True)
class BoundCall:
    name: str
    params: dict
    provenance: dict

    def record(self) -> dict:
        return {"CALL": self.name, "ARGS": self.params}

    def to_json(self) -> str:
        return json.dumps(self.record(), ensure_ascii=False, separators=(",", ":"), sort_keys=False)


class Registry:
    def __init__(self, descriptors: Iterable[FunctionDescriptor] = ()):
        self._fns: dict[str, FunctionDescriptor] = {}
        for d in descriptors:
            self.register(d)

    def register(self, d: FunctionDescriptor) -> "Registry":
        if d.name in self._fns:
            raise DuplicateName(f"function {d.name!r} already registered")
        self._fns[d.name] = d
        return self

    def __contains__(self, name: str) -> bool:
        return name in self._fns

    def __getitem__(self, name: str) -> FunctionDescriptor:
        try:
            return self._fns[name]
        except KeyError:
            raise UnknownFunction(f"no function named {name!r}") from None

    def names(self) -> list[str]:
        return list(self._fns)

    def to_json(self) -> str:
        return json.dumps([d.to_dict() for d in self._fns.values()], ensure_ascii=False, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Registry":
        return cls(FunctionDescriptor.from_dict(d) for d in json.loads(text))


def register_function(registry: Registry, descriptor: FunctionDescriptor) -> Registry:
    return registry.register(descriptor)


def resolve(registry: Registry, name: str, user_params: Optional[Mapping] = None) -> BoundCall:
    desc = registry[name]
    user_params = dict(user_params or {})
    known = {p.name for p in desc.params}
    unknown = sorted(set(user_params) - known)
    if unknown:
        raise UnknownParam(f"{name}: unknown parameter(s) {unknown}")
    bound, prov = {}, {}
    for p in desc.params:
        if p.name in user_params:
            bound[p.name] = user_params[p.name]
            prov[p.name] = USER
        elif p.required:
            raise MissingRequiredParam(f"{name}: missing required parameter {p.name!r}")
        else:
            bound[p.name] = copy.deepcopy(p.default)
            prov[p.name] = DEFAULTED
    return BoundCall(name, bound, prov)


class ToolEnv:
    """Simulated tool backends: a mailbox and a video catalog."""

    def __init__(self, catalog: Optional[list[dict]] = None, faults: Iterable[str] = ()):
        self.mailbox: list[dict] = []
        self.catalog: list[dict] = [dict(v, likes=v.get("likes", 0), coins=v.get("coins", 0)) for v in (catalog or [])]
        self.faults = set(faults)
        self.calls = 0
        self._tools: dict[str, Callable[..., dict]] = {
            "send_email": self._send_email,
            "like": self._like,
            "coin": self._coin,
            "search": self._search,
        }

    def implements(self, name: str) -> bool:
        return name in self._tools

    def state(self) -> dict:
        return {"mailbox": copy.deepcopy(self.mailbox), "catalog": copy.deepcopy(self.catalog)}

    def invoke(self, name: str, params: Mapping) -> dict:
        if name not in self._tools:
            raise ToolFault(f"tool {name!r} not available in this environment")
        if name in self.faults:
            raise ToolFault(f"injected fault in {name}")
        self.calls += 1
        return self._tools[name](**params)

    def _video(self, video_id: str) -> dict:
        for v in self.catalog:
            if v["id"] == video_id:
                return v
        raise ToolFault(f"unknown video {video_id!r}")

    def _send_email(self, to, subject="", body="", attachments=()):
        if not to:
            raise ToolFault("empty recipient")
        msg_id = f"msg-{len(self.mailbox) + 1:04d}"
        self.mailbox.append({"id": msg_id, "to": to, "subject": subject, "body": body,
                             "attachments": list(attachments or [])})
        return {"delivered": True, "message_id": msg_id}

    def _like(self, video_id):
        v = self._video(video_id)
        v["likes"] += 1
        return {"video_id": video_id, "likes": v["likes"]}

    def _coin(self, video_id, count=1):
        if count not in (1, 2):
            raise ToolFault("coin count must be 1 or 2")
        v = self._video(video_id)
        v["coins"] += count
        return {"video_id": video_id, "coins": v["coins"]}

    def _search(self, keyword):
        terms = set(keyword.lower().split())
        scored = []
        for pos, v in enumerate(self.catalog):
            words = set(v.get("title", "").lower().split()) | {t.lower() for t in v.get("tags", [])}
            score = len(terms & words)
            if score:
                scored.append((-score, pos, v["id"]))
        return {"keyword": keyword, "results": [vid for _, _, vid in sorted(scored)]}


def execute(call: BoundCall, env: ToolEnv) -> dict:
    """Run one bound call; faults leave the environment untouched."""
    try:
        return env.invoke(call.name, call.params)
    except ToolFault:
        raise
    except Exception as exc:
        raise ToolFault(f"{call.name} failed: {exc}") from exc


GUI = "gui"
FUNCTION_CALL = "function_call"


@dataclass(frozen=True)
class Route:
    kind: str
    call: Optional[BoundCall] = None


def plan_path(task: Mapping, registry: Registry) -> Route:
    """Function route only when the user explicitly selected a function."""
    name = task.get("function")
    if not name:
        return Route(GUI)
    if name not in registry:
        raise UnknownFunction(f"selected function {name!r} is not registered")
    return Route(FUNCTION_CALL, resolve(registry, name, task.get("params", {})))


def default_registry() -> Registry:
    return Registry(
        [
            FunctionDescriptor(
                "send_email",
                (
                    ParamSpec("to", "string"),
                    ParamSpec("subject", "string", False, ""),
                    ParamSpec("body", "string", False, ""),
                    ParamSpec("attachments", "list", False, []),
                ),
                "Send an email through the mail service.",
            ),
            FunctionDescriptor("like", (ParamSpec("video_id", "string"),), "Like a video."),
            FunctionDescriptor(
                "coin",
                (ParamSpec("video_id", "string"), ParamSpec("count", "int", False, 1)),
                "Give coins to a video.",
            ),
            FunctionDescriptor("search", (ParamSpec("keyword", "string"),), "Keyword search over the video catalog."),
        ]
    )
