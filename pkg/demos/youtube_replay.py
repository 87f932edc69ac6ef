"""Run the YouTube search twice: the first run plans with a three-agent
ensemble, the second replays the archived actions without any policy call.

    python3 demos/youtube_replay.py
"""

from __future__ import annotations

import json

from guikernel.harness import PipelineConfig, load_world, run_pipeline


def main() -> None:
    world = load_world("youtube-search")
    cfg = PipelineConfig(ensemble=3, reset=True)
    instruction = world.default_instruction

    first = run_pipeline(world, "phone", instruction, cfg)
    print(f"first run: route={first.route} steps={len(first.trace.steps)} "
          f"policy calls={first.policy_invocations} ticks={first.ticks}")
    for s in first.trace.steps:
        cal = s["calibration"]["verdict"] if s["calibration"] else "-"
        votes = [json.loads(p["action"]) if isinstance(p["action"], str) else p["action"] for p in s["proposals"]]
        print(f"  t={s['tick']:>3}  {s['executed']:<32} calibration={cal:<20} proposals={votes}")

    second = run_pipeline(world, "phone", instruction, cfg)
    print(f"second run: route={second.route} steps={len(second.trace.steps)} "
          f"policy calls={second.policy_invocations} ticks={second.ticks}")
    print(f"efficiency gain: 1 - {second.ticks}/{first.ticks} = {1 - second.ticks / first.ticks:.3f}")


if __name__ == "__main__":
    main()
