from __future__ import annotations

import random

import pytest

from guikernel.errors import NothingMatched, UnknownField, ValidationFailed
from guikernel.memory import (
    CHANGED,
    INSERTED,
    UNCHANGED,
    FieldSpec,
    PersonalStore,
    PersonalTriple,
    parse_slots,
)
from guikernel.screen import Screen, WidgetRecord


def text_screen(*contents):
    return Screen(tuple(WidgetRecord(i, "text", c, False, (0, i * 10, 100, i * 10 + 5)) for i, c in enumerate(contents)))


def test_insert_change_unchanged():
    ps = PersonalStore()
    assert ps.update(("mother", "phone_number", "13800000000")) == INSERTED
    assert ps.update(("Mother", "Phone_Number", "13800000000")) == UNCHANGED
    assert ps.update(PersonalTriple("mother", "phone_number", "13900000000")) == CHANGED
    assert ps.retrieve("MOTHER", "phone_number") == "13900000000"
    log = ps.history("mother", "phone_number")
    assert [(c.old, c.new) for c in log] == [(None, "13800000000"), ("13800000000", "13900000000")]
    assert log[0].tick < log[1].tick


def test_validation_and_unknown_field():
    ps = PersonalStore()
    with pytest.raises(ValidationFailed):
        ps.update(("mother", "phone_number", "12345"))
    with pytest.raises(ValidationFailed):
        ps.update(("self", "id_number", "11010519491231002"))
    with pytest.raises(UnknownField):
        ps.update(("mother", "shoe_size", "42"))
    assert ps.history() == []


def test_id_number_accepts_check_letter():
    ps = PersonalStore()
    assert ps.update(("self", "id_number", "11010519491231002X")) == INSERTED


def test_parse_slots():
    assert parse_slots("Call my mother") == [("mother", "phone_number")]
    assert parse_slots("Send dad's address by SMS") == [("father", "phone_number"), ("father", "address")]
    assert parse_slots("Recharge 50 yuan to this device's number") == [("self", "phone_number")]
    assert parse_slots("Open the settings") == []


def test_inject_context_and_capture():
    ps = PersonalStore()
    ps.update(("mother", "phone_number", "13800000000"))
    ctx = ps.inject_context("Call my mother and text grandson")
    assert ctx.values == {"mother.phone_number": "13800000000"}
    assert ctx.unresolved == ["grandson.phone_number"]
    screen = text_screen("Contacts", "Grandson: 13712345678")
    ctx = ps.inject_context("Call my grandson", screen=screen)
    assert ctx.values == {"grandson.phone_number": "13712345678"}
    assert ps.retrieve("grandson", "phone_number") == "13712345678"
    assert "grandson.phone_number: 13712345678" in ctx.block()


def test_capture_nothing_matched():
    ps = PersonalStore()
    with pytest.raises(NothingMatched):
        ps.capture_from_screen(("mother", "phone_number"), text_screen("no digits here"))


def test_custom_field_and_sweep():
    ps = PersonalStore([FieldSpec("email", r"^[^@\s]+@[^@\s]+$")])
    ps.update(("self", "email", "a@b.c"))
    assert ps.sweep() == []
    ps.fields["email"] = FieldSpec("email", r"^[^@\s]+@example\.com$")
    assert ps.sweep() == [PersonalTriple("self", "email", "a@b.c")]


def test_persistence_resumes_ticks():
    ps = PersonalStore()
    ps.update(("mother", "phone_number", "13800000000"))
    ps.update(("mother", "address", "1 Main St"))
    back = PersonalStore.load(ps.dump_store(), ps.dump_log(), ps.dump_fields())
    assert back.items() == ps.items()
    assert back.dump_log() == ps.dump_log()
    back.update(("father", "phone_number", "13600000000"))
    assert back.history()[-1].tick == ps.history()[-1].tick + 1


def test_injected_clock():
    ticks = iter(range(100, 200))
    ps = PersonalStore(clock=lambda: next(ticks))
    ps.update(("self", "address", "Room 1"))
    assert ps.history()[0].tick == 100


def test_randomized_against_reference():
    rng = random.Random(3)
    ps = PersonalStore()
    ref: dict = {}
    ref_log: list = []
    values = ["13800000000", "13900000000", "bad", "1 Main St", "11010519491231002X"]
    for _ in range(300):
        r = rng.choice(["mother", "father", "self"])
        f = rng.choice(["phone_number", "address", "id_number"])
        v = rng.choice(values)
        spec = ps.field_spec(f)
        if not spec.validate(v):
            with pytest.raises(ValidationFailed):
                ps.update((r, f, v))
            continue
        got = ps.update((r, f, v))
        old = ref.get((r, f))
        want = UNCHANGED if old == v else (INSERTED if old is None else CHANGED)
        assert got == want
        if want != UNCHANGED:
            ref[(r, f)] = v
            ref_log.append((r, f, old, v))
        assert ps.retrieve(r, f) == ref.get((r, f))
    assert [(c.relation, c.field, c.old, c.new) for c in ps.history()] == ref_log
