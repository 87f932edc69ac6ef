"""Standardized atomic action space and its compact single-line wire format.

A record is a flat JSON object whose keys are drawn from
``POINT, to, TYPE, PRESS, STATUS, duration``.  Coordinates are integers in
per-mille of the screen extent, so ``[500, 500]`` is always the centre.

Accepted key sets and the intent they express::

    {POINT}              click
    {POINT, STATUS}      click annotated with a progress status
    {POINT, to}          swipe (to = direction tag or second point)
    {POINT, duration}    long press
    {TYPE}               type text into the focused element
    {PRESS}              system key
    {STATUS}             status report
    {STATUS, duration}   status report held for a timed wait
    {duration}           timed wait

Every other key subset is rejected with :class:`InvalidCombination`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Optional, Tuple, Union

from .errors import InvalidCombination, MalformedRecord, OutOfBounds, OutOfRange, UnknownKey

Point = Tuple[int, int]

KEY_ORDER = ("POINT", "to", "TYPE", "PRESS", "STATUS", "duration")
PRESS_KEYS = ("HOME", "BACK", "ENTER")
STATUSES = ("start", "finish", "impossible", "need_feedback")
DIRECTIONS = ("up", "down", "left", "right")
COORD_MAX = 1000

# key subset -> intent type
COMBINATIONS: dict[frozenset, str] = {
    frozenset({"POINT"}): "click",
    frozenset({"POINT", "STATUS"}): "click",
    frozenset({"POINT", "to"}): "swipe",
    frozenset({"POINT", "duration"}): "long_press",
    frozenset({"TYPE"}): "type",
    frozenset({"PRESS"}): "press",
    frozenset({"STATUS"}): "status",
    frozenset({"STATUS", "duration"}): "status",
    frozenset({"duration"}): "wait",
}

INTENT_TYPES = ("click", "swipe", "long_press", "type", "press", "status", "wait")


def _check_point(p: Any, what: str) -> Point:
    if (
        not isinstance(p, (tuple, list))
        or len(p) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in p)
    ):
        raise MalformedRecord(f"{what} must be a pair of integers, got {p!r}")
    x, y = p
    if not (0 <= x <= COORD_MAX and 0 <= y <= COORD_MAX):
        raise OutOfRange(f"{what} {tuple(p)} outside [0, {COORD_MAX}]")
    return (x, y)


@dataclass(frozen=True)
class Action:
    """One atomic agent operation.  Validated on construction."""

    point: Optional[Point] = None
    to: Optional[Union[str, Point]] = None
    type_text: Optional[str] = None
    press: Optional[str] = None
    status: Optional[str] = None
    duration: Optional[int] = None

    def __post_init__(self) -> None:
        if self.point is not None:
            object.__setattr__(self, "point", _check_point(self.point, "POINT"))
        if self.to is not None:
            if isinstance(self.to, str):
                if self.to not in DIRECTIONS:
                    raise OutOfRange(f"unknown swipe direction {self.to!r}")
            else:
                object.__setattr__(self, "to", _check_point(self.to, "to"))
        if self.type_text is not None and not isinstance(self.type_text, str):
            raise MalformedRecord("TYPE must be a string")
        if self.press is not None and self.press not in PRESS_KEYS:
            raise OutOfRange(f"PRESS must be one of {PRESS_KEYS}, got {self.press!r}")
        if self.status is not None and self.status not in STATUSES:
            raise OutOfRange(f"STATUS must be one of {STATUSES}, got {self.status!r}")
        if self.duration is not None:
            if not isinstance(self.duration, int) or isinstance(self.duration, bool):
                raise MalformedRecord("duration must be an integer")
            if self.duration <= 0:
                raise OutOfRange("duration must be positive")
        keys = self.keys()
        if keys not in COMBINATIONS:
            raise InvalidCombination(f"invalid key combination {sorted(keys)}")

    def keys(self) -> frozenset:
        values = (self.point, self.to, self.type_text, self.press, self.status, self.duration)
        return frozenset(k for k, v in zip(KEY_ORDER, values) if v is not None)

    @property
    def intent(self) -> str:
        return COMBINATIONS[self.keys()]

    def to_record(self) -> dict:
        out: dict[str, Any] = {}
        if self.point is not None:
            out["POINT"] = list(self.point)
        if self.to is not None:
            out["to"] = self.to if isinstance(self.to, str) else list(self.to)
        if self.type_text is not None:
            out["TYPE"] = self.type_text
        if self.press is not None:
            out["PRESS"] = self.press
        if self.status is not None:
            out["STATUS"] = self.status
        if self.duration is not None:
            out["duration"] = self.duration
        return out

    def __str__(self) -> str:
        return serialize_action(self)


# convenience constructors


def click(x: int, y: int) -> Action:
    return Action(point=(x, y))


def swipe(x: int, y: int, to: Union[str, Point]) -> Action:
    return Action(point=(x, y), to=to)


def type_text(text: str) -> Action:
    return Action(type_text=text)


def press(key: str) -> Action:
    return Action(press=key)


def status(tag: str, duration: Optional[int] = None) -> Action:
    return Action(status=tag, duration=duration)


def _reject_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise MalformedRecord(f"duplicate key {k!r}")
        seen[k] = v
    return seen


def _norm_status(v: Any) -> Any:
    if isinstance(v, str):
        return re.sub(r"[\s\-]+", "_", v.strip()).lower()
    return v


def action_from_record(rec: dict) -> Action:
    """Build an :class:`Action` from an already-decoded record mapping."""
    if not isinstance(rec, dict):
        raise MalformedRecord("record must be a JSON object")
    unknown = set(rec) - set(KEY_ORDER)
    if unknown:
        raise UnknownKey(f"unknown key(s): {sorted(unknown)}")
    for k, v in rec.items():
        if isinstance(v, dict):
            raise MalformedRecord(f"nested object under {k!r}; records are flat")
    to = rec.get("to")
    if isinstance(to, str):
        to = to.strip().lower()
    elif to is not None and not isinstance(to, list):
        raise MalformedRecord("to must be a direction tag or a coordinate pair")
    press_key = rec.get("PRESS")
    if isinstance(press_key, str):
        press_key = press_key.strip().upper()
    return Action(
        point=rec.get("POINT"),
        to=to,
        type_text=rec.get("TYPE"),
        press=press_key,
        status=_norm_status(rec.get("STATUS")),
        duration=rec.get("duration"),
    )


def parse_action(text: str) -> Action:
    """Parse a compact record such as ``{"POINT": [87, 445], "STATUS": "start"}``.

    Whitespace between tokens is ignored.  ``STATUS`` accepts the spaced
    ``NEED FEEDBACK`` spelling and normalizes it to ``need_feedback``.
    """
    try:
        rec = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not a JSON record: {exc}") from None
    return action_from_record(rec)


def serialize_action(a: Action) -> str:
    """Minimal record, fixed key order, no whitespace after separators."""
    return json.dumps(a.to_record(), ensure_ascii=False, separators=(",", ":"))


def token_count(record: str) -> int:
    """Number of word tokens when whitespace and punctuation both delimit."""
    return len(re.findall(r"\w+", record))


def _round_half_up(num: int, den: int) -> int:
    # num, den >= 0
    return (2 * num + den) // (2 * den)


def normalize_point(pixel: Tuple[int, int], screen_dims: Tuple[int, int]) -> Point:
    px, py = pixel
    w, h = screen_dims
    if w <= 0 or h <= 0:
        raise OutOfBounds(f"screen dims must be positive, got {screen_dims}")
    if not (0 <= px < w and 0 <= py < h):
        raise OutOfBounds(f"pixel {pixel} outside {w}x{h}")
    x = min(_round_half_up(px * COORD_MAX, w), COORD_MAX)
    y = min(_round_half_up(py * COORD_MAX, h), COORD_MAX)
    return (x, y)


def denormalize_point(point: Point, screen_dims: Tuple[int, int]) -> Tuple[int, int]:
    x, y = point
    w, h = screen_dims
    if not (0 <= x <= COORD_MAX and 0 <= y <= COORD_MAX):
        raise OutOfRange(f"point {point} outside [0, {COORD_MAX}]")
    if w <= 0 or h <= 0:
        raise OutOfBounds(f"screen dims must be positive, got {screen_dims}")
    px = min(_round_half_up(x * w, COORD_MAX), w - 1)
    py = min(_round_half_up(y * h, COORD_MAX), h - 1)
    return (px, py)
