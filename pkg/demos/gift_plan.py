"""Two phones cooperate on a gift purchase.

The plan's subtasks run on their allocated devices.  The preference tags
read on one phone travel over the bus and become the search term on the
other.

    python3 demos/gift_plan.py
"""

from __future__ import annotations

from guikernel.harness import PipelineConfig, load_world, plan_from_world, run_cross_device
from guikernel.planner import check_log


def main() -> None:
    world = load_world("gift-purchase")
    plan = plan_from_world(world)
    print("topological order:", " -> ".join(plan.graph.topological_order()))
    res = run_cross_device(world, config=PipelineConfig(ensemble=3))
    for e in res.plan_result.log:
        print(f"  t={e['tick']:>3}  {plan.endpoint(e['subtask']):<11} {e['subtask']}  {e['transition']}")
    for m in res.bus.log:
        print(f"  t={m.tick:>3}  bus {m.sender} -> {m.receiver} after {m.subtask}: {m.payload}")
    last = res.runs["st5"].trace.steps
    typed = [s["executed"] for s in last if "TYPE" in s["executed"]]
    print("typed on the buyer's phone:", typed)
    print("status:", res.status, "| ordering violations:", check_log(plan.graph, res.plan_result.log))

    world = load_world("gift-purchase")
    killed = run_cross_device(world, kill=(plan.endpoint("st3"), "st3"))
    print("with st3's endpoint killed:", killed.status,
          dict(sorted(killed.plan_result.plan_status.states.items())))


if __name__ == "__main__":
    main()
