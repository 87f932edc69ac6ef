"""Click-coordinate calibration against widget regions.

A proposed click that misses every widget is moved to the centre of the
nearest interactive widget.  Corrections that were executed and left the
screen unchanged are remembered per screen digest; proposing the same
correction again on that screen falls back to the original point.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .screen import BBox, Screen, WidgetRecord, hash_screen, hit_test

Point = tuple

KEPT_INSIDE = "kept_inside"
CORRECTED = "corrected"
BYPASSED = "bypassed_by_history"
KEPT_NO_WIDGETS = "kept_no_widgets"


def squared_distance_to_box(p: Sequence[int], b: BBox) -> int:
    x, y = p
    x1, y1, x2, y2 = b
    dx = max(x1 - x, 0, x - x2)
    dy = max(y1 - y, 0, y - y2)
    return dx * dx + dy * dy


def distance_to_box(p: Sequence[int], b: BBox) -> float:
    """Euclidean distance from ``p`` to the closed rectangle ``b`` (0 inside)."""
    return math.sqrt(squared_distance_to_box(p, b))


class FailureMemory:
    """Per-digest sets of correction targets that produced no state change.

    Reads may happen from any thread; writers are serialized by a lock.
    """

    def __init__(self, entries: Optional[dict[int, Iterable[Point]]] = None):
        self._points: dict[int, set[tuple[int, int]]] = {}
        self._lock = threading.Lock()
        for digest, pts in (entries or {}).items():
            for p in pts:
                self.add(digest, p)

    def add(self, digest: int, point: Sequence[int]) -> None:
        with self._lock:
            self._points.setdefault(digest, set()).add((int(point[0]), int(point[1])))

    def __contains__(self, item) -> bool:
        digest, point = item
        return tuple(point) in self._points.get(digest, ())

    def points(self, digest: int) -> frozenset:
        return frozenset(self._points.get(digest, ()))

    def __len__(self) -> int:
        return sum(len(v) for v in self._points.values())

    def digests(self) -> list[int]:
        return sorted(self._points)

    def to_jsonl(self) -> str:
        lines = []
        for d in sorted(self._points):
            for p in sorted(self._points[d]):
                lines.append(json.dumps({"digest": f"{d:016x}", "point": list(p)}))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "FailureMemory":
        fm = cls()
        for line in text.splitlines():
            if line.strip():
                rec = json.loads(line)
                fm.add(int(rec["digest"], 16), rec["point"])
        return fm


@dataclass(frozen=True)
class CorrectionOutcome:
    final_point: tuple[int, int]
    verdict: str
    chosen_box: Optional[BBox] = None
    distance: Optional[float] = None
    chosen_index: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "final_point": list(self.final_point),
            "verdict": self.verdict,
            "chosen_box": list(self.chosen_box) if self.chosen_box else None,
            "distance": self.distance,
        }


def nearest_widget(p: Sequence[int], widgets: Iterable[WidgetRecord]) -> Optional[WidgetRecord]:
    # ties: smaller area, then lower index
    best = None
    best_key = None
    for w in widgets:
        key = (squared_distance_to_box(p, w.bbox), w.area, w.index)
        if best_key is None or key < best_key:
            best, best_key = w, key
    return best


def correct_point(
    p: Sequence[int], s: Screen, fm: FailureMemory, digest: Optional[int] = None
) -> CorrectionOutcome:
    p = (int(p[0]), int(p[1]))
    if hit_test(s, p):
        return CorrectionOutcome(p, KEPT_INSIDE, distance=0.0)
    target = nearest_widget(p, s.interactive_widgets)
    if target is None:
        return CorrectionOutcome(p, KEPT_NO_WIDGETS)
    c = target.center
    d = distance_to_box(p, target.bbox)
    if digest is None:
        digest = hash_screen(s)
    if (digest, c) in fm:
        return CorrectionOutcome(p, BYPASSED, target.bbox, d, target.index)
    return CorrectionOutcome(c, CORRECTED, target.bbox, d, target.index)


def record_failure(fm: FailureMemory, digest: int, executed_point: Sequence[int]) -> FailureMemory:
    fm.add(digest, executed_point)
    return fm
