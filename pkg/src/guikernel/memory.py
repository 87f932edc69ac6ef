"""Personal information store of (relation, field, value) triples.

The hot store and the change log are kept apart: the store answers lookups,
the log records every insertion and change with a logical tick.
"""

from __future__ import annotations

import itertools
import json
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import NothingMatched, UnknownField, ValidationFailed

INSERTED = "inserted"
CHANGED = "changed"
UNCHANGED = "unchanged"


@dataclass(frozen=True)
class FieldSpec:
    field: str
    pattern: str
    label: str = ""

    def __post_init__(self) -> None:
        re.compile(self.pattern)

    @property
    def regex(self) -> re.Pattern:
        return re.compile(self.pattern)

    def validate(self, value: str) -> bool:
        return self.regex.fullmatch(value) is not None

    def search(self, text: str) -> Optional[str]:
        """Leftmost substring of ``text`` that fully matches the pattern."""
        body = self.pattern
        if body.startswith("^"):
            body = body[1:]
        if body.endswith("$") and not body.endswith("\\$"):
            body = body[:-1]
        rx = re.compile(body)
        for m in rx.finditer(text):
            if self.validate(m.group(0)):
                return m.group(0)
        return None


DEFAULT_FIELDS = (
    FieldSpec("phone_number", r"^1\d{10}$", "mobile phone number"),
    FieldSpec("address", r"^(?=.*\S)[\s\S]{1,200}$", "postal address"),
    FieldSpec("id_number", r"^\d{17}[\dXx]$", "national ID number"),
)


@dataclass(frozen=True)
class PersonalTriple:
    relation: str
    field: str
    value: str


@dataclass(frozen=True)
class ChangeRecord:
    tick: int
    relation: str
    field: str
    old: Optional[str]
    new: str

    def to_dict(self) -> dict:
        return {"tick": self.tick, "r": self.relation, "f": self.field, "old": self.old, "new": self.new}


def norm_key(s: str) -> str:
    return s.strip().lower()


# lexicon used to turn free-text instructions into (relation, field) slots
RELATION_ALIASES = {
    "mother": ("mother", "mom", "mommy", "mum", "mama", "妈妈", "母亲"),
    "father": ("father", "dad", "daddy", "papa", "爸爸", "父亲"),
    "grandson": ("grandson", "孙子"),
    "self": ("my", "me", "myself", "this device", "本机", "我"),
}
FIELD_KEYWORDS = {
    "phone_number": ("call", "phone", "number", "message", "sms", "text", "dial", "recharge", "电话", "短信"),
    "address": ("address", "ship", "deliver", "navigate", "地址"),
    "id_number": ("id number", "id card", "identity", "身份证"),
}


def _mentions(text: str, word: str) -> bool:
    if re.fullmatch(r"[\w ]+", word) and word.isascii():
        return re.search(rf"\b{re.escape(word)}\b", text) is not None
    return word in text


def parse_slots(instruction: str) -> list[tuple[str, str]]:
    """Lexicon lookup of (relation, field) slots mentioned in ``instruction``."""
    text = instruction.lower()
    relations = [r for r, aliases in RELATION_ALIASES.items() if r != "self" and any(_mentions(text, a) for a in aliases)]
    # "my mother's number" is about the mother; "self" only when nobody else is named
    if not relations and any(_mentions(text, a) for a in RELATION_ALIASES["self"]):
        relations = ["self"]
    fields = [f for f, words in FIELD_KEYWORDS.items() if any(_mentions(text, w) for w in words)]
    return [(r, f) for r in relations for f in fields]


@dataclass
class Context:
    """Instruction plus the personal values resolved for it."""

    instruction: str
    values: dict[str, str] = field(default_factory=dict)
    unresolved: list[str] = field(default_factory=list)

    def block(self) -> str:
        lines = [self.instruction]
        for k in sorted(self.values):
            lines.append(f"{k}: {self.values[k]}")
        return "\n".join(lines)


class PersonalStore:
    """Hot store ``P`` plus change log ``L_c``.

    ``clock`` supplies timestamps; by default a logical counter.  Pass
    ``wall_clock=True`` to stamp records with ``time.time_ns()`` instead.
    """

    def __init__(
        self,
        fields: Iterable[FieldSpec] = DEFAULT_FIELDS,
        clock: Optional[Callable[[], int]] = None,
        wall_clock: bool = False,
    ):
        self.fields: dict[str, FieldSpec] = {}
        for spec in fields:
            self.fields[norm_key(spec.field)] = spec
        self._values: dict[tuple[str, str], str] = {}
        self._log: list[ChangeRecord] = []
        if clock is None:
            clock = time.time_ns if wall_clock else itertools.count().__next__
        self._clock = clock
        self._lock = threading.RLock()

    # ---- lookup / mutation ----

    def field_spec(self, f: str) -> FieldSpec:
        try:
            return self.fields[norm_key(f)]
        except KeyError:
            raise UnknownField(f"field {f!r} is not registered") from None

    def retrieve(self, r: str, f: str) -> Optional[str]:
        return self._values.get((norm_key(r), norm_key(f)))

    def update(self, triple: PersonalTriple | Sequence[str]) -> str:
        r, f, v = (triple.relation, triple.field, triple.value) if isinstance(triple, PersonalTriple) else triple
        spec = self.field_spec(f)
        if not isinstance(v, str) or not spec.validate(v):
            raise ValidationFailed(f"{v!r} is not a valid {spec.field}")
        key = (norm_key(r), norm_key(f))
        with self._lock:
            old = self._values.get(key)
            if old == v:
                return UNCHANGED
            self._values[key] = v
            self._log.append(ChangeRecord(self._clock(), key[0], key[1], old, v))
            return INSERTED if old is None else CHANGED

    def capture_from_screen(self, slot: tuple[str, str], screen) -> str:
        """Scan widget contents in index order and store the first valid match."""
        r, f = slot
        spec = self.field_spec(f)
        with self._lock:
            for w in sorted(screen.widgets, key=lambda w: w.index):
                found = spec.search(w.content)
                if found is not None:
                    self.update((r, f, found))
                    return found
        raise NothingMatched(f"no on-screen text matches {spec.field}")

    def inject_context(self, instruction: str, slots: Optional[Iterable[tuple[str, str]]] = None, screen=None) -> Context:
        if slots is None:
            slots = parse_slots(instruction)
        ctx = Context(instruction)
        for r, f in slots:
            key = f"{norm_key(r)}.{norm_key(f)}"
            v = self.retrieve(r, f)
            if v is None and screen is not None:
                try:
                    v = self.capture_from_screen((r, f), screen)
                except NothingMatched:
                    v = None
            if v is None:
                if key not in ctx.unresolved:
                    ctx.unresolved.append(key)
            else:
                ctx.values[key] = v
        return ctx

    def history(self, r: Optional[str] = None, f: Optional[str] = None) -> list[ChangeRecord]:
        return [
            c for c in self._log
            if (r is None or c.relation == norm_key(r)) and (f is None or c.field == norm_key(f))
        ]

    def items(self) -> list[PersonalTriple]:
        return [PersonalTriple(r, f, v) for (r, f), v in sorted(self._values.items())]

    def sweep(self) -> list[PersonalTriple]:
        """Stored triples whose value no longer matches its field pattern."""
        return [t for t in self.items() if not self.field_spec(t.field).validate(t.value)]

    # ---- persistence ----

    def dump_store(self) -> str:
        return json.dumps({f"{r}|{f}": v for (r, f), v in sorted(self._values.items())}, ensure_ascii=False, indent=1)

    def dump_log(self) -> str:
        return "".join(json.dumps(c.to_dict(), ensure_ascii=False) + "\n" for c in self._log)

    def dump_fields(self) -> str:
        return json.dumps(
            [{"field": s.field, "pattern": s.pattern, "label": s.label} for s in self.fields.values()],
            ensure_ascii=False,
            indent=1,
        )

    @classmethod
    def load(cls, store: str, log: str = "", fields: Optional[str] = None, **kwargs) -> "PersonalStore":
        specs = DEFAULT_FIELDS if fields is None else [FieldSpec(**d) for d in json.loads(fields)]
        ps = cls(specs, **kwargs)
        for key, v in json.loads(store).items():
            r, f = key.split("|", 1)
            ps._values[(r, f)] = v
        for line in log.splitlines():
            if line.strip():
                d = json.loads(line)
                ps._log.append(ChangeRecord(d["tick"], d["r"], d["f"], d["old"], d["new"]))
        if ps._log and "clock" not in kwargs and not kwargs.get("wall_clock"):
            ps._clock = itertools.count(ps._log[-1].tick + 1).__next__
        return ps
