"""A few ensemble decisions, showing each tie-break in isolation."""

from __future__ import annotations

from guikernel.actions import Action
from guikernel.ensemble import Proposal, decide

ROUNDS = {
    "clicks: centroid-nearest point": [Action(point=(100, 100)), Action(point=(110, 100)), Action(point=(400, 100))],
    "long presses: duration nearest the mean": [Action(point=(5, 5), duration=d) for d in (800, 1000, 1500)],
    "type tie: earliest proposer wins": [Action(press="BACK"), Action(type_text="a"), Action(type_text="a"), Action(press="HOME")],
    "text after NFC": [Action(type_text="caf\u00e9"), Action(type_text="cafe\u0301"), Action(type_text="cafe")],
}


def main() -> None:
    for title, actions in ROUNDS.items():
        d = decide([Proposal(i, a) for i, a in enumerate(actions)])
        print(f"{title}: {[str(a) for a in actions]} -> {d.action} (agent {d.source_agent})")


if __name__ == "__main__":
    main()
