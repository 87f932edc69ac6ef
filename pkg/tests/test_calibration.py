from __future__ import annotations

import math
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guikernel.calibration import (
    BYPASSED,
    CORRECTED,
    KEPT_INSIDE,
    KEPT_NO_WIDGETS,
    FailureMemory,
    correct_point,
    distance_to_box,
    nearest_widget,
    record_failure,
)
from guikernel.screen import Screen, WidgetRecord, hash_screen, ingest_widgets

TABLE = [
    {"index": 11, "type": "Icon (Application)", "content": "YouTube", "interactive": "Yes", "bbox": [0.74, 0.63, 0.90, 0.73]},
    {"index": 12, "type": "Icon (Application)", "content": "Play Store", "interactive": "Yes", "bbox": [0.10, 0.63, 0.26, 0.73]},
    {"index": 13, "type": "Text", "content": "Thu, Aug 7", "interactive": "No", "bbox": [0.12, 0.14, 0.18, 0.17]},
]


def clamp_distance(p, b):
    # nearest point on the rectangle by clamping, then Euclidean length
    qx = min(max(p[0], b[0]), b[2])
    qy = min(max(p[1], b[1]), b[3])
    return math.hypot(p[0] - qx, p[1] - qy)


def test_distance_examples():
    b = (100, 100, 200, 200)
    assert distance_to_box((150, 150), b) == 0.0
    assert distance_to_box((100, 100), b) == 0.0
    assert distance_to_box((0, 150), b) == 100.0
    assert distance_to_box((203, 204), b) == 5.0


def test_inside_click_is_kept():
    s = ingest_widgets(TABLE)
    out = correct_point((800, 700), s, FailureMemory())
    assert out.verdict == KEPT_INSIDE
    assert out.final_point == (800, 700)


def test_click_on_non_interactive_widget_is_kept():
    s = ingest_widgets(TABLE)
    assert correct_point((150, 150), s, FailureMemory()).verdict == KEPT_INSIDE


def test_miss_snaps_to_nearest_interactive_centre():
    s = ingest_widgets(TABLE)
    out = correct_point((920, 680), s, FailureMemory())
    assert out.verdict == CORRECTED
    assert out.final_point == (820, 680)
    assert out.chosen_index == 11
    assert out.distance == pytest.approx(20.0)
    # the text widget is closer but not interactive
    out = correct_point((150, 200), s, FailureMemory())
    assert out.chosen_index == 12


def test_no_interactive_widgets():
    s = Screen((WidgetRecord(0, "text", "t", False, (0, 0, 10, 10)),))
    out = correct_point((500, 500), s, FailureMemory())
    assert out.verdict == KEPT_NO_WIDGETS
    assert out.final_point == (500, 500)


def test_tie_breaks_by_area_then_index():
    small = WidgetRecord(2, "button", "s", True, (0, 0, 10, 10))
    big = WidgetRecord(1, "button", "b", True, (30, 0, 60, 30))
    twin = WidgetRecord(0, "button", "t", True, (0, 30, 10, 40))
    # (20, 5) is 10 from small and 10 from big
    assert nearest_widget((20, 5), [big, small]).index == 2
    # (5, 20) is 10 from small and 10 from twin (equal areas): lower index wins
    assert nearest_widget((5, 20), [small, twin]).index == 0


def test_failure_memory_bypass():
    s = ingest_widgets(TABLE)
    fm = FailureMemory()
    d = hash_screen(s)
    record_failure(fm, d, (820, 680))
    out = correct_point((920, 680), s, fm)
    assert out.verdict == BYPASSED
    assert out.final_point == (920, 680)
    # another screen is unaffected
    other = ingest_widgets(TABLE[:2])
    assert correct_point((920, 680), other, fm).verdict == CORRECTED


def test_failure_memory_jsonl_round_trip():
    fm = FailureMemory()
    fm.add(0xABCDEF, (1, 2))
    fm.add(0xABCDEF, (3, 4))
    fm.add(7, (5, 6))
    back = FailureMemory.from_jsonl(fm.to_jsonl())
    assert back.points(0xABCDEF) == {(1, 2), (3, 4)}
    assert (7, (5, 6)) in back
    assert len(back) == 3


def test_failure_memory_concurrent_writes():
    fm = FailureMemory()

    def writer(k):
        for i in range(200):
            fm.add(k, (i, i))

    threads = [threading.Thread(target=writer, args=(k,)) for k in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(fm) == 1600


def random_screen(rng: random.Random, n: int) -> Screen:
    widgets = []
    for i in range(n):
        x1, y1 = rng.randint(0, 980), rng.randint(0, 980)
        x2, y2 = rng.randint(x1 + 1, min(1000, x1 + 300)), rng.randint(y1 + 1, min(1000, y1 + 300))
        widgets.append(WidgetRecord(i, "button", f"w{i}", rng.random() < 0.7, (x1, y1, x2, y2)))
    return Screen(tuple(widgets))


def test_oracle_equivalence_random():
    rng = random.Random(1234)
    for _ in range(300):
        s = random_screen(rng, rng.randint(1, 12))
        p = (rng.randint(0, 1000), rng.randint(0, 1000))
        out = correct_point(p, s, FailureMemory())
        inside = [w for w in s.widgets if w.contains(p)]
        inter = s.interactive_widgets
        if inside:
            assert out.verdict == KEPT_INSIDE
        elif not inter:
            assert out.verdict == KEPT_NO_WIDGETS
        else:
            best = min(clamp_distance(p, w.bbox) for w in inter)
            assert out.distance == pytest.approx(best, abs=1e-9)
            assert out.final_point == s.widget(out.chosen_index).center


@settings(max_examples=300, deadline=None)
@given(st.tuples(st.integers(0, 1000), st.integers(0, 1000)),
       st.integers(0, 999), st.integers(0, 999), st.integers(1, 500), st.integers(1, 500))
def test_distance_matches_clamp_oracle(p, x1, y1, w, h):
    b = (x1, y1, min(1000, x1 + w), min(1000, y1 + h))
    assert abs(distance_to_box(p, b) - clamp_distance(p, b)) <= 1e-9
