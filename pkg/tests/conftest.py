from __future__ import annotations

import pytest


def demo_doc() -> dict:
    """Tiny single-app world with one dead button next to empty space."""
    def w(i, t, c, inter, bbox):
        return {"index": i, "type": t, "content": c, "interactive": inter, "bbox": bbox}

    return {
        "name": "demo", "seed": 1,
        "apps": {
            "launcher": {"initial": "home", "screens": {"home": {"widgets": [
                w(0, "Button", "Dead", True, [0.40, 0.40, 0.60, 0.50]),
                w(1, "Button", "Next", True, [0.10, 0.80, 0.30, 0.90]),
                w(2, "Input Field", "Name", True, [0.10, 0.10, 0.90, 0.15]),
            ]}, "done": {"widgets": [w(0, "Text", "Done", False, [0.1, 0.1, 0.9, 0.2])]}},
                "transitions": {"home": {"click:1": "done"}}},
        },
        "devices": [{"id": "phone", "apps": ["launcher"], "home": "launcher"}],
        "scripts": [
            {"device": "phone", "instruction": "poke twice then next", "steps": [
                {"match": {"screen": "launcher/home"}, "emit": {"POINT": [500, 560]}},
                {"match": {"screen": "launcher/home"}, "emit": {"POINT": [500, 560]}},
                {"match": {"screen": "launcher/home"}, "emit": {"POINT": {"widget": "Next"}}},
                {"match": {"screen": "launcher/done"}, "emit": {"STATUS": "finish"}},
            ]},
            {"device": "phone", "instruction": "type my name", "steps": [
                {"match": {}, "emit": {"POINT": {"widget": "Name"}}},
                {"match": {}, "emit": {"TYPE": "{self.name}"}},
                {"match": {}, "emit": {"STATUS": "finish"}},
            ]},
            {"device": "phone", "instruction": "loop forever", "steps": [
                {"match": {}, "emit": {"STATUS": "start"}}] * 100},
        ],
        "feedback": {"self.name": "Ann"},
    }


@pytest.fixture
def demo_world_doc():
    return demo_doc()


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
