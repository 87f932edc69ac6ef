"""Task dependency graphs, endpoint allocation and the synchronization protocol.

A subtask may start only once every predecessor is ``Completed``.  When a
subtask fails, all of its descendants are marked ``Skipped``.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import (
    CycleDetected,
    DanglingEdge,
    ExecutorError,
    IllegalTransition,
    MixedEndpointKinds,
    PartialAllocation,
    UnclassifiableFeatureCombination,
    UnknownEndpoint,
)

PENDING = "Pending"
RUNNING = "Running"
COMPLETED = "Completed"
FAILED = "Failed"
SKIPPED = "Skipped"

STARTED = "started"
COMPLETED_EV = "completed"
FAILED_EV = "failed"
SKIPPED_EV = "skipped"


@dataclass(frozen=True)
class TaskGraph:
    subtasks: tuple[tuple[str, str], ...]
    edges: frozenset

    @property
    def ids(self) -> list[str]:
        return [sid for sid, _ in self.subtasks]

    def description(self, sid: str) -> str:
        return dict(self.subtasks)[sid]

    def predecessors(self, sid: str) -> list[str]:
        return sorted(a for a, b in self.edges if b == sid)

    def successors(self, sid: str) -> list[str]:
        return sorted(b for a, b in self.edges if a == sid)

    def descendants(self, sid: str) -> set[str]:
        out: set[str] = set()
        stack = [sid]
        while stack:
            for nxt in self.successors(stack.pop()):
                if nxt not in out:
                    out.add(nxt)
                    stack.append(nxt)
        return out

    def topological_order(self) -> list[str]:
        order = _topo(self.ids, self.edges)
        assert order is not None
        return order


def _topo(ids: Sequence[str], edges: Iterable[tuple[str, str]]) -> Optional[list[str]]:
    indeg = {i: 0 for i in ids}
    succ: dict[str, list[str]] = {i: [] for i in ids}
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    rank = {sid: n for n, sid in enumerate(ids)}
    queue = deque(sorted((i for i in ids if indeg[i] == 0), key=rank.get))
    order = []
    while queue:
        n = queue.popleft()
        order.append(n)
        for m in sorted(succ[n], key=rank.get):
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    return order if len(order) == len(ids) else None


def _find_cycle(ids: Sequence[str], edges: Iterable[tuple[str, str]]) -> list[str]:
    succ: dict[str, list[str]] = {i: [] for i in ids}
    for a, b in edges:
        succ[a].append(b)
    color = {i: 0 for i in ids}
    path: list[str] = []

    def dfs(n: str) -> Optional[list[str]]:
        color[n] = 1
        path.append(n)
        for m in sorted(succ[n]):
            if color[m] == 1:
                return path[path.index(m):] + [m]
            if color[m] == 0:
                found = dfs(m)
                if found:
                    return found
        color[n] = 2
        path.pop()
        return None

    for i in ids:
        if color[i] == 0:
            found = dfs(i)
            if found:
                return found
    return []


def build_graph(subtasks: Iterable, edges: Iterable[Sequence[str]]) -> TaskGraph:
    """Validate and freeze a dependency graph.

    ``subtasks`` holds ``(id, description)`` pairs or bare ids.
    """
    items = []
    for st in subtasks:
        if isinstance(st, str):
            items.append((st, st))
        elif isinstance(st, Mapping):
            items.append((str(st["id"]), str(st.get("description", st["id"]))))
        else:
            items.append((str(st[0]), str(st[1])))
    ids = [i for i, _ in items]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate subtask id")
    known = set(ids)
    edge_set = set()
    for e in edges:
        a, b = str(e[0]), str(e[1])
        if a not in known or b not in known:
            raise DanglingEdge(f"edge ({a}, {b}) references an unknown subtask")
        edge_set.add((a, b))
    if _topo(ids, edge_set) is None:
        raise CycleDetected(_find_cycle(ids, edge_set))
    return TaskGraph(tuple(items), frozenset(edge_set))


@dataclass(frozen=True)
class AllocatedPlan:
    graph: TaskGraph
    allocation: Mapping[str, str]
    endpoints: Mapping[str, str]  # endpoint id -> kind ("device" | "app")

    @property
    def kind(self) -> Optional[str]:
        kinds = set(self.endpoints.values())
        return kinds.pop() if kinds else None

    @property
    def is_cross_app(self) -> bool:
        return self.kind == "app"

    def endpoint(self, sid: str) -> str:
        return self.allocation[sid]


def allocate(graph: TaskGraph, mapping: Mapping[str, str], endpoints) -> AllocatedPlan:
    """Attach an endpoint to every subtask.

    ``endpoints`` maps id -> kind, or is a list of ``{"id", "kind"}`` objects.
    """
    if not isinstance(endpoints, Mapping):
        endpoints = {str(e["id"]): str(e["kind"]) for e in endpoints}
    kinds = set(endpoints.values())
    if not kinds <= {"device", "app"}:
        raise ValueError(f"unknown endpoint kind(s) {sorted(kinds - {'device', 'app'})}")
    if len(kinds) > 1:
        raise MixedEndpointKinds("a plan must use device endpoints or app endpoints, not both")
    missing = [sid for sid in graph.ids if sid not in mapping]
    if missing:
        raise PartialAllocation(f"no endpoint for {missing}")
    extra = set(mapping) - set(graph.ids)
    if extra:
        raise ValueError(f"allocation names unknown subtasks {sorted(extra)}")
    for sid, ep in mapping.items():
        if ep not in endpoints:
            raise UnknownEndpoint(f"{sid} allocated to unknown endpoint {ep!r}")
    return AllocatedPlan(graph, dict(mapping), dict(endpoints))


@dataclass
class PlanStatus:
    states: dict[str, str]
    log: list[dict] = field(default_factory=list)

    @classmethod
    def fresh(cls, plan_or_graph) -> "PlanStatus":
        graph = getattr(plan_or_graph, "graph", plan_or_graph)
        return cls({sid: PENDING for sid in graph.ids})

    def __getitem__(self, sid: str) -> str:
        return self.states[sid]

    def copy(self) -> "PlanStatus":
        return PlanStatus(dict(self.states), list(self.log))


def ready_set(plan, status: PlanStatus) -> set[str]:
    graph = getattr(plan, "graph", plan)
    return {
        sid
        for sid in graph.ids
        if status.states[sid] == PENDING
        and all(status.states[p] == COMPLETED for p in graph.predecessors(sid))
    }


class _Counter:
    def __init__(self):
        self._it = itertools.count()

    def __call__(self) -> int:
        return next(self._it)


def advance(plan, status: PlanStatus, event: str, sid: str, tick: Optional[int] = None) -> PlanStatus:
    """Apply one transition in place and return ``status``."""
    graph = getattr(plan, "graph", plan)
    cur = status.states.get(sid)
    if cur is None:
        raise IllegalTransition(f"unknown subtask {sid!r}")
    if tick is None:
        tick = len(status.log)
    if event == STARTED:
        if cur != PENDING:
            raise IllegalTransition(f"{sid}: cannot start from {cur}")
        blocked = [p for p in graph.predecessors(sid) if status.states[p] != COMPLETED]
        if blocked:
            raise IllegalTransition(f"{sid}: predecessors not completed: {blocked}")
        status.states[sid] = RUNNING
    elif event in (COMPLETED_EV, FAILED_EV):
        if cur != RUNNING:
            raise IllegalTransition(f"{sid}: cannot finish from {cur}")
        status.states[sid] = COMPLETED if event == COMPLETED_EV else FAILED
    else:
        raise IllegalTransition(f"unknown event {event!r}")
    status.log.append({"tick": tick, "subtask": sid, "transition": event})
    if event == FAILED_EV:
        for d in sorted(graph.descendants(sid), key=graph.ids.index):
            if status.states[d] == PENDING:
                status.states[d] = SKIPPED
                status.log.append({"tick": tick, "subtask": d, "transition": SKIPPED_EV})
    return status


@dataclass
class PlanResult:
    status: str  # COMPLETED or FAILED
    plan_status: PlanStatus
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def log(self) -> list[dict]:
        return self.plan_status.log

    def log_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.log)


Executor = Callable[[str], object]


def _outcome(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        return value.lower() in ("completed", "complete", "success", "ok")
    raise ExecutorError(f"executor returned {value!r}")


def run_plan(
    plan: AllocatedPlan,
    executors: Mapping[str, Executor] | Executor,
    *,
    clock: Optional[Callable[[], int]] = None,
    on_complete: Optional[Callable[[str, PlanStatus], None]] = None,
    serialize_endpoints: bool = True,
) -> PlanResult:
    """Drive the plan to quiescence.

    ``executors`` maps endpoint id to a callable taking the subtask id and
    returning ``"completed"``/``"failed"`` (or a bool).  Exceptions count as
    failures and are collected in :attr:`PlanResult.errors`.

    Each round starts every ready subtask (at most one per endpoint when
    ``serialize_endpoints``; one overall for app-endpoint plans, which share a
    single device), then reports their outcomes in start order.
    """
    clock = clock or _Counter()
    status = PlanStatus.fresh(plan)
    errors: dict[str, str] = {}
    graph = plan.graph
    order = {sid: n for n, sid in enumerate(graph.ids)}

    def executor_for(sid: str) -> Executor:
        if callable(executors):
            return executors
        return executors[plan.allocation[sid]]

    while True:
        ready = sorted(ready_set(plan, status), key=order.get)
        if not ready:
            break
        batch: list[str] = []
        busy: set[str] = set()
        for sid in ready:
            ep = plan.allocation[sid]
            if plan.is_cross_app and serialize_endpoints and batch:
                break
            if serialize_endpoints and ep in busy:
                continue
            busy.add(ep)
            batch.append(sid)
        for sid in batch:
            advance(plan, status, STARTED, sid, clock())
        outcomes = []
        for sid in batch:
            try:
                ok = _outcome(executor_for(sid)(sid))
            except Exception as exc:  # endpoint fault -> subtask failure
                errors[sid] = f"{type(exc).__name__}: {exc}"
                ok = False
            outcomes.append((sid, ok))
        for sid, ok in outcomes:
            advance(plan, status, COMPLETED_EV if ok else FAILED_EV, sid, clock())
            if ok and on_complete is not None:
                on_complete(sid, status)
    done = all(s == COMPLETED for s in status.states.values())
    return PlanResult(COMPLETED if done else FAILED, status, errors)


def check_log(graph: TaskGraph, log: Sequence[dict]) -> list[str]:
    """Return every violation of the start-after-predecessors rule in ``log``."""
    done: set[str] = set()
    violations = []
    for e in log:
        if e["transition"] == STARTED:
            missing = [p for p in graph.predecessors(e["subtask"]) if p not in done]
            if missing:
                violations.append(f"{e['subtask']} started before {missing} completed")
        elif e["transition"] == COMPLETED_EV:
            done.add(e["subtask"])
    return violations


# ---- plan files ----


def load_plan(doc) -> AllocatedPlan:
    """Plan file: ``{subtasks: [{id, description}], edges: [[a, b]], allocation, endpoints}``."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    graph = build_graph(doc["subtasks"], doc.get("edges", []))
    return allocate(graph, doc["allocation"], doc["endpoints"])


def dump_plan(plan: AllocatedPlan) -> dict:
    return {
        "subtasks": [{"id": i, "description": d} for i, d in plan.graph.subtasks],
        "edges": sorted([a, b] for a, b in plan.graph.edges),
        "allocation": dict(plan.allocation),
        "endpoints": [{"id": e, "kind": k} for e, k in plan.endpoints.items()],
    }


# ---- cross-task taxonomy ----


@dataclass(frozen=True)
class CrossTaskClass:
    app_class: Optional[str]
    device_class: Optional[str]
    realtime: bool = False

    @property
    def executable(self) -> bool:
        if self.app_class == "collaborative_multi":
            return False
        if self.realtime or self.device_class in ("II", "IV"):
            return False
        return True


_APP_ROWS = {
    (False, False, True): "passive_linkage",
    (True, True, True): "data_passing",
    (True, True, False): "collaborative_multi",
}

_QUADRANTS = {
    ("async", "master_slave"): "I",
    ("realtime", "master_slave"): "II",
    ("async", "peer"): "III",
    ("realtime", "peer"): "IV",
}


def classify_cross_task(features: Mapping) -> CrossTaskClass:
    """Map task features to the cross-app row and cross-device quadrant.

    Quadrants: I task delivery (async, master-slave), II remote control
    (realtime, master-slave), III information sharing (async, peer),
    IV realtime collaboration (realtime, peer).
    """
    key = (bool(features["needs_memory"]), bool(features["proactive_switch"]), bool(features["linear_flow"]))
    if key not in _APP_ROWS:
        raise UnclassifiableFeatureCombination(f"no task type for features {key}")
    sync = features.get("sync")
    roles = features.get("roles")
    if sync not in (None, "realtime", "async"):
        raise ValueError(f"sync must be realtime or async, got {sync!r}")
    if roles not in (None, "master_slave", "peer"):
        raise ValueError(f"roles must be master_slave or peer, got {roles!r}")
    quadrant = _QUADRANTS.get((sync, roles))
    return CrossTaskClass(_APP_ROWS[key], quadrant, realtime=sync == "realtime")
