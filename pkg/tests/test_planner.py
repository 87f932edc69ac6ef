from __future__ import annotations

import json
import random

import pytest

from guikernel.errors import (
    CycleDetected,
    DanglingEdge,
    IllegalTransition,
    MixedEndpointKinds,
    PartialAllocation,
    UnclassifiableFeatureCombination,
    UnknownEndpoint,
)
from guikernel.planner import (
    COMPLETED,
    FAILED,
    PENDING,
    RUNNING,
    SKIPPED,
    PlanStatus,
    advance,
    allocate,
    build_graph,
    check_log,
    classify_cross_task,
    dump_plan,
    load_plan,
    ready_set,
    run_plan,
)

CHAIN = [("st1", "st2"), ("st2", "st3"), ("st3", "st4"), ("st4", "st5")]
GIFT_ALLOC = {"st1": "lily_phone", "st2": "lily_phone", "st3": "lily_phone", "st4": "my_phone", "st5": "my_phone"}
DEVICES = {"lily_phone": "device", "my_phone": "device"}


def gift_plan():
    return allocate(build_graph([f"st{i}" for i in range(1, 6)], CHAIN), GIFT_ALLOC, DEVICES)


def test_topological_order_and_neighbours():
    g = build_graph(["a", "b", "c", "d"], [("a", "c"), ("b", "c"), ("c", "d")])
    assert g.topological_order() == ["a", "b", "c", "d"]
    assert g.predecessors("c") == ["a", "b"]
    assert g.descendants("a") == {"c", "d"}


def test_cycle_witness():
    with pytest.raises(CycleDetected) as err:
        build_graph(["a", "b", "c"], [("a", "b"), ("b", "c"), ("c", "a")])
    cycle = err.value.cycle
    assert cycle[0] == cycle[-1]
    assert len(cycle) == 4
    for x, y in zip(cycle, cycle[1:]):
        assert (x, y) in {("a", "b"), ("b", "c"), ("c", "a")}


def test_self_loop_is_a_cycle():
    with pytest.raises(CycleDetected):
        build_graph(["a"], [("a", "a")])


def test_dangling_edge():
    with pytest.raises(DanglingEdge):
        build_graph(["a"], [("a", "zz")])


def test_allocation_errors():
    g = build_graph(["a", "b"], [("a", "b")])
    with pytest.raises(PartialAllocation):
        allocate(g, {"a": "d1"}, {"d1": "device"})
    with pytest.raises(UnknownEndpoint):
        allocate(g, {"a": "d1", "b": "d9"}, {"d1": "device"})
    with pytest.raises(MixedEndpointKinds):
        allocate(g, {"a": "d1", "b": "app1"}, {"d1": "device", "app1": "app"})


def test_transitions():
    plan = gift_plan()
    s = PlanStatus.fresh(plan)
    assert ready_set(plan, s) == {"st1"}
    with pytest.raises(IllegalTransition):
        advance(plan, s, "started", "st2")
    advance(plan, s, "started", "st1")
    assert s["st1"] == RUNNING
    with pytest.raises(IllegalTransition):
        advance(plan, s, "started", "st1")
    advance(plan, s, "completed", "st1")
    assert ready_set(plan, s) == {"st2"}
    advance(plan, s, "started", "st2")
    advance(plan, s, "failed", "st2")
    assert [s[k] for k in ("st2", "st3", "st4", "st5")] == [FAILED, SKIPPED, SKIPPED, SKIPPED]
    with pytest.raises(IllegalTransition):
        advance(plan, s, "completed", "st3")


def test_run_plan_gift_chain_all_succeed():
    res = run_plan(gift_plan(), {"lily_phone": lambda sid: True, "my_phone": lambda sid: "completed"})
    assert res.status == COMPLETED
    starts = [e["subtask"] for e in res.log if e["transition"] == "started"]
    assert starts == ["st1", "st2", "st3", "st4", "st5"]
    assert check_log(gift_plan().graph, res.log) == []


def test_run_plan_failure_skips_descendants():
    def lily(sid):
        if sid == "st2":
            raise RuntimeError("device offline")
        return True

    res = run_plan(gift_plan(), {"lily_phone": lily, "my_phone": lambda sid: True})
    assert res.status == FAILED
    assert res.plan_status.states == {"st1": COMPLETED, "st2": FAILED, "st3": SKIPPED, "st4": SKIPPED, "st5": SKIPPED}
    assert "device offline" in res.errors["st2"]


def test_independent_endpoints_run_in_the_same_round():
    g = build_graph(["a", "b", "c"], [("a", "c"), ("b", "c")])
    plan = allocate(g, {"a": "d1", "b": "d2", "c": "d1"}, {"d1": "device", "d2": "device"})
    res = run_plan(plan, lambda sid: True)
    assert [e["subtask"] for e in res.log[:2]] == ["a", "b"]
    assert all(e["transition"] == "started" for e in res.log[:2])


def test_same_endpoint_is_serialized():
    g = build_graph(["a", "b"], [])
    plan = allocate(g, {"a": "d1", "b": "d1"}, {"d1": "device"})
    res = run_plan(plan, lambda sid: True)
    assert [e["transition"] for e in res.log] == ["started", "completed", "started", "completed"]


def test_app_plan_is_fully_serialized():
    g = build_graph(["a", "b"], [])
    plan = allocate(g, {"a": "mail", "b": "maps"}, {"mail": "app", "maps": "app"})
    assert plan.is_cross_app
    res = run_plan(plan, lambda sid: True)
    assert [e["transition"] for e in res.log] == ["started", "completed", "started", "completed"]


def test_plan_file_round_trip():
    plan = gift_plan()
    doc = dump_plan(plan)
    assert load_plan(json.dumps(doc)) == plan


def test_check_log_catches_violation():
    g = build_graph(["a", "b"], [("a", "b")])
    bad = [{"tick": 0, "subtask": "b", "transition": "started"}]
    assert check_log(g, bad)


def random_dag(rng, n):
    ids = [f"n{i}" for i in range(n)]
    perm = ids[:]
    rng.shuffle(perm)
    edges = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.25]
    return build_graph(ids, edges)


def test_random_dags_never_violate_sync_rule():
    rng = random.Random(5)
    for _ in range(100):
        g = random_dag(rng, rng.randint(1, 12))
        eps = {f"d{i}": "device" for i in range(3)}
        plan = allocate(g, {sid: rng.choice(list(eps)) for sid in g.ids}, eps)
        outcomes = {sid: rng.random() < 0.85 for sid in g.ids}
        res = run_plan(plan, lambda sid: outcomes[sid])
        assert check_log(g, res.log) == []
        assert all(v != PENDING and v != RUNNING for v in res.plan_status.states.values())


@pytest.mark.parametrize(
    "features,app,quad,executable",
    [
        ({"needs_memory": False, "proactive_switch": False, "linear_flow": True}, "passive_linkage", None, True),
        ({"needs_memory": True, "proactive_switch": True, "linear_flow": True, "sync": "async", "roles": "master_slave"},
         "data_passing", "I", True),
        ({"needs_memory": True, "proactive_switch": True, "linear_flow": False}, "collaborative_multi", None, False),
        ({"needs_memory": True, "proactive_switch": True, "linear_flow": True, "sync": "realtime", "roles": "peer"},
         "data_passing", "IV", False),
        ({"needs_memory": True, "proactive_switch": True, "linear_flow": True, "sync": "async", "roles": "peer"},
         "data_passing", "III", True),
        ({"needs_memory": True, "proactive_switch": True, "linear_flow": True, "sync": "realtime", "roles": "master_slave"},
         "data_passing", "II", False),
    ],
)
def test_classification(features, app, quad, executable):
    c = classify_cross_task(features)
    assert (c.app_class, c.device_class, c.executable) == (app, quad, executable)


def test_unclassifiable():
    with pytest.raises(UnclassifiableFeatureCombination):
        classify_cross_task({"needs_memory": False, "proactive_switch": True, "linear_flow": False})
