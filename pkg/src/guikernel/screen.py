"""Structured screen state: widget records, hit testing and a canonical digest.

Widget bounding boxes live in the same per-mille integer space as actions.
Upstream parsers emit unit-interval floats; :func:`ingest_widgets` converts.

Digest algorithm (stable across runs and platforms):

1. sort widgets by ``index``;
2. render each as ``type US content US qx1,qy1,qx2,qy2 RS`` where ``US`` is
   ``\\x1f``, ``RS`` is ``\\x1e`` and ``q = min(coord // 50, 19)`` (a 20x20 grid);
3. hash the UTF-8 bytes with 64-bit FNV-1a.

The empty screen therefore hashes to the FNV offset basis,
:data:`EMPTY_DIGEST`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple, Union

from .errors import BadBbox, DuplicateIndex

BBox = Tuple[int, int, int, int]

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
EMPTY_DIGEST = FNV_OFFSET
GRID = 20
CELL = 1000 // GRID


@dataclass(frozen=True)
class WidgetRecord:
    index: int
    widget_type: str
    content: str
    interactive: bool
    bbox: BBox

    def __post_init__(self) -> None:
        check_bbox(self.bbox)
        if self.index < 0:
            raise ValueError("widget index must be non-negative")

    @property
    def area(self) -> int:
        x1, y1, x2, y2 = self.bbox
        return (x2 - x1) * (y2 - y1)

    @property
    def center(self) -> Tuple[int, int]:
        return bbox_center(self.bbox)

    def contains(self, p: Sequence[int]) -> bool:
        x1, y1, x2, y2 = self.bbox
        return x1 <= p[0] <= x2 and y1 <= p[1] <= y2

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "type": self.widget_type,
            "content": self.content,
            "interactive": self.interactive,
            "bbox": list(self.bbox),
        }


@dataclass(frozen=True)
class Screen:
    widgets: Tuple[WidgetRecord, ...] = ()
    screen_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "widgets", tuple(self.widgets))
        seen = set()
        for w in self.widgets:
            if w.index in seen:
                raise DuplicateIndex(f"duplicate widget index {w.index}")
            seen.add(w.index)

    def widget(self, index: int) -> WidgetRecord:
        for w in self.widgets:
            if w.index == index:
                return w
        raise KeyError(index)

    def find(self, content: str) -> WidgetRecord | None:
        """First widget (screen order) whose content equals ``content``."""
        for w in self.widgets:
            if w.content == content:
                return w
        return None

    @property
    def interactive_widgets(self) -> list[WidgetRecord]:
        return [w for w in self.widgets if w.interactive]


def check_bbox(b: Sequence[int]) -> BBox:
    if len(b) != 4:
        raise BadBbox(f"bbox needs 4 coordinates, got {b!r}")
    x1, y1, x2, y2 = b
    if not all(0 <= v <= 1000 for v in b):
        raise BadBbox(f"bbox {tuple(b)} outside [0, 1000]")
    if not (x1 < x2 and y1 < y2):
        raise BadBbox(f"bbox {tuple(b)} has reversed or degenerate corners")
    return (x1, y1, x2, y2)


def bbox_center(b: BBox) -> Tuple[int, int]:
    """Integer centre; halves round away from zero."""
    x1, y1, x2, y2 = b
    return ((x1 + x2 + 1) // 2, (y1 + y2 + 1) // 2)


def _type_tag(raw: str) -> str:
    tag = re.sub(r"\(.*?\)", "", raw).strip().lower()
    return re.sub(r"\s+", "_", tag)


def _interactive(raw) -> bool:
    if isinstance(raw, str):
        return raw.strip().lower() in ("yes", "true", "1")
    return bool(raw)


def _scale(v: float) -> int:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0.0 <= v <= 1.0:
        raise BadBbox(f"bbox coordinate {v!r} outside [0, 1]")
    return int(v * 1000 + 0.5)


def ingest_widgets(fixture: Union[str, Iterable[dict]], screen_id: str = "") -> Screen:
    """Build a :class:`Screen` from a widget-fixture document.

    ``fixture`` is a JSON string or an already-decoded list of objects with
    keys ``index, type, content, interactive, bbox`` where ``bbox`` holds four
    floats in ``[0, 1]``.
    """
    if isinstance(fixture, str):
        fixture = json.loads(fixture)
    widgets = []
    for entry in fixture:
        raw = entry["bbox"]
        if len(raw) != 4:
            raise BadBbox(f"bbox needs 4 coordinates, got {raw!r}")
        bbox = check_bbox(tuple(_scale(v) for v in raw))
        widgets.append(
            WidgetRecord(
                index=int(entry["index"]),
                widget_type=_type_tag(str(entry["type"])),
                content=str(entry.get("content", "")),
                interactive=_interactive(entry.get("interactive", False)),
                bbox=bbox,
            )
        )
    return Screen(tuple(widgets), screen_id)


def hit_test(s: Screen, p: Sequence[int]) -> list[WidgetRecord]:
    """All widgets whose closed bbox contains ``p``, in screen order."""
    return [w for w in s.widgets if w.contains(p)]


def quantize(v: int) -> int:
    return min(v // CELL, GRID - 1)


def canonical_bytes(s: Screen) -> bytes:
    parts = []
    for w in sorted(s.widgets, key=lambda w: w.index):
        q = ",".join(str(quantize(v)) for v in w.bbox)
        parts.append(f"{w.widget_type}\x1f{w.content}\x1f{q}\x1e")
    return "".join(parts).encode("utf-8")


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def hash_screen(s: Screen) -> int:
    return fnv1a_64(canonical_bytes(s))


def digest_hex(d: int) -> str:
    return f"{d:016x}"
