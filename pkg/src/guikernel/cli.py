"""Command-line entry point: ``guikernel <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

from .ensemble import Proposal, decide, decision_round_record
from .errors import KernelError
from .experience import efficiency_gain
from .grpo import GrpoConfig, metrics_csv, train
from .harness import (
    PipelineConfig,
    load_world,
    read_traces,
    reexecute,
    run_cross_device,
    run_pipeline,
)
from .planner import COMPLETED, check_log, load_plan, run_plan


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run_scenario(scenario: str, instruction: Optional[str] = None, *, ensemble: int = 1,
                 seed: Optional[int] = None, repeat: int = 1, device: Optional[str] = None,
                 function: Optional[str] = None, params: Optional[dict] = None) -> str:
    """Run a scenario and return its JSON-lines log.

    Scenarios with a plan run cross-device unless an instruction is given.
    """
    world = load_world(scenario)
    if seed is not None:
        world.seed = seed
    config = PipelineConfig(ensemble=ensemble, function=function, params=dict(params or {}), reset=True)
    if instruction is None and world.plan_doc:
        config.reset = False
        res = run_cross_device(world, config=config)
        lines = [tr.to_jsonl() for dev in sorted(res.traces) for tr in res.traces[dev]]
        lines += [json.dumps({"kind": "plan", **e}, sort_keys=True) + "\n" for e in res.plan_result.log]
        lines += [json.dumps({"kind": "bus", **m.to_dict()}, sort_keys=True, ensure_ascii=False) + "\n"
                  for m in res.bus.log]
        return "".join(lines)
    instruction = instruction or world.default_instruction
    if not instruction:
        raise SystemExit(f"scenario {world.name!r} has no default instruction; pass --instruction")
    device = device or next(iter(world.devices))
    out = []
    for _ in range(repeat):
        out.append(run_pipeline(world, device, instruction, config).trace.to_jsonl())
    return "".join(out)


def metrics_rows(traces) -> list[dict]:
    """Per-instruction hit rate, tick means and efficiency gain, plus an overall row."""
    groups = defaultdict(list)
    for t in traces:
        groups[t.header["instruction"]].append(t)
    groups["*"] = list(traces)
    rows = []
    for instr, ts in groups.items():
        gui = [t for t in ts if t.header.get("route") in ("standard", "replay")]
        std = [t for t in gui if t.header["route"] == "standard" and t.header.get("status") == "finish"]
        rep = [t for t in gui if t.header["route"] == "replay"]
        hits = sum(1 for t in ts if t.header.get("hit"))

        def mean(xs):
            return sum(xs) / len(xs) if xs else None

        t_std = mean([t.header["ticks"] for t in std])
        t_rep = mean([t.header["ticks"] for t in rep])
        eta = efficiency_gain(t_std, t_rep) if t_std and t_rep is not None else None
        rows.append({
            "instruction": instr, "runs": len(ts), "hits": hits, "H": hits / len(ts) if ts else 0.0,
            "std_ticks": t_std, "replay_ticks": t_rep, "eta": eta,
            "std_steps": mean([len(t.steps) for t in std]), "replay_steps": mean([len(t.steps) for t in rep]),
        })
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def metrics_csv_text(traces) -> str:
    buf = io.StringIO()
    cols = ["instruction", "runs", "hits", "H", "std_ticks", "replay_ticks", "eta", "std_steps", "replay_steps"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in metrics_rows(traces):
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


# ---- commands ----


def cmd_run(args) -> int:
    params = json.loads(args.params) if args.params else {}
    text = run_scenario(args.scenario, args.instruction, ensemble=args.ensemble, seed=args.seed,
                        repeat=args.repeat, device=args.device, function=args.function, params=params)
    _write(text, args.out)
    return 0


def cmd_replay(args) -> int:
    traces = read_traces(Path(args.log).read_text(encoding="utf-8"))
    if not traces:
        print("no runs in log", file=sys.stderr)
        return 1
    scenario = args.scenario or traces[0].header.get("scenario")
    world = load_world(scenario)
    ok_all = True
    # cross-device logs interleave devices; re-simulate in start-tick order
    for t in sorted(traces, key=lambda t: t.header["start_tick"]):
        ok = reexecute(world, t)
        ok_all &= ok
        print(f"run {t.header['run']} {t.header['device']}: {'verified' if ok else 'MISMATCH'}")
    return 0 if ok_all else 1


def cmd_plan(args) -> int:
    doc = json.loads(Path(args.planfile).read_text(encoding="utf-8"))
    plan = load_plan(doc)
    if args.scenario:
        world = load_world(args.scenario)
        if doc.get("outputs") is not None:
            world.plan_doc = doc
        res = run_cross_device(world, plan, PipelineConfig(ensemble=args.ensemble))
        log, status = res.plan_result.log, res.status
        extra = "".join(json.dumps({"kind": "bus", **m.to_dict()}, sort_keys=True) + "\n" for m in res.bus.log)
    else:
        # dry run: every endpoint succeeds immediately
        result = run_plan(plan, lambda sid: True)
        log, status, extra = result.log, result.status, ""
    lines = "".join(json.dumps({"kind": "plan", **e}, sort_keys=True) + "\n" for e in log)
    _write(lines + extra, args.out)
    violations = check_log(plan.graph, log)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    print(f"plan {status}; order {' -> '.join(plan.graph.topological_order())}", file=sys.stderr)
    return 0 if status == COMPLETED and not violations else 1


def cmd_grpo_train(args) -> int:
    config = GrpoConfig.from_json(Path(args.config).read_text(encoding="utf-8")) if args.config else GrpoConfig()
    _, history = train(config)
    _write(metrics_csv(history), args.out)
    return 0


def cmd_vote_demo(args) -> int:
    doc = json.loads(Path(args.proposals).read_text(encoding="utf-8"))
    rounds = doc if doc and isinstance(doc[0], list) else [doc]
    for props in rounds:
        proposals = [Proposal.from_dict(p) for p in props]
        print(json.dumps(decision_round_record(proposals, decide(proposals)), ensure_ascii=False, sort_keys=True))
    return 0


def cmd_metrics(args) -> int:
    traces = read_traces(Path(args.tracefile).read_text(encoding="utf-8"))
    _write(metrics_csv_text(traces), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="guikernel", description="GUI agent decision kernel and device simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an instruction (or the scenario's plan) and emit its trace")
    r.add_argument("scenario", help="bundled scenario name or path to a scenario JSON file")
    r.add_argument("--instruction")
    r.add_argument("--device")
    r.add_argument("--ensemble", type=int, default=1)
    r.add_argument("--seed", type=int)
    r.add_argument("--repeat", type=int, default=1, help="run the instruction this many times in one world")
    r.add_argument("--function", help="take the function-call route with this registered function")
    r.add_argument("--params", help="JSON object of function parameters")
    r.add_argument("--out")
    r.set_defaults(fn=cmd_run)

    rp = sub.add_parser("replay", help="re-simulate a trace log and check every digest")
    rp.add_argument("log")
    rp.add_argument("--scenario")
    rp.set_defaults(fn=cmd_replay)

    pl = sub.add_parser("plan", help="schedule a plan file (dry run, or on a scenario's devices)")
    pl.add_argument("planfile")
    pl.add_argument("--scenario")
    pl.add_argument("--ensemble", type=int, default=1)
    pl.add_argument("--out")
    pl.set_defaults(fn=cmd_plan)

    g = sub.add_parser("grpo-train", help="train the toy navigation policy and emit metrics CSV")
    g.add_argument("config", nargs="?", help="JSON file of GrpoConfig fields")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_grpo_train)

    v = sub.add_parser("vote-demo", help="vote over proposals read from a JSON file")
    v.add_argument("proposals")
    v.set_defaults(fn=cmd_vote_demo)

    m = sub.add_parser("metrics", help="hit rate, efficiency gain and step counts from a trace log")
    m.add_argument("tracefile")
    m.add_argument("--out")
    m.set_defaults(fn=cmd_metrics)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (KernelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
