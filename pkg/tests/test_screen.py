from __future__ import annotations

import json
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guikernel.errors import BadBbox, DuplicateIndex
from guikernel.screen import (
    EMPTY_DIGEST,
    Screen,
    WidgetRecord,
    bbox_center,
    canonical_bytes,
    digest_hex,
    fnv1a_64,
    hash_screen,
    hit_test,
    ingest_widgets,
    quantize,
)


def table_fixture():
    return json.loads(resources.files("guikernel.scenarios").joinpath("fixtures/launcher-widgets.json").read_text())


def test_fnv_reference_vectors():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_ingest_table_fixture():
    s = ingest_widgets(table_fixture(), "home")
    yt = s.widget(11)
    assert yt.widget_type == "icon"
    assert yt.content == "YouTube"
    assert yt.interactive is True
    assert yt.bbox == (740, 630, 900, 730)
    assert s.widget(13).interactive is False
    assert s.widget(13).bbox == (120, 140, 180, 170)
    assert [w.index for w in s.interactive_widgets] == [11, 12]


def test_ingest_accepts_json_text():
    text = json.dumps(table_fixture())
    assert ingest_widgets(text) == ingest_widgets(table_fixture())


@pytest.mark.parametrize("bbox", [[0.5, 0.5, 0.4, 0.6], [0.1, 0.1, 0.1, 0.2], [0.0, 0.0, 1.2, 0.5], [0.1, 0.2, 0.3]])
def test_ingest_rejects_bad_bbox(bbox):
    with pytest.raises(BadBbox):
        ingest_widgets([{"index": 0, "type": "Text", "content": "", "interactive": "No", "bbox": bbox}])


def test_duplicate_index_rejected():
    w = WidgetRecord(1, "text", "a", False, (0, 0, 10, 10))
    with pytest.raises(DuplicateIndex):
        Screen((w, w))


def test_hit_test_boundaries_are_closed():
    s = ingest_widgets(table_fixture())
    assert [w.index for w in hit_test(s, (740, 630))] == [11]
    assert [w.index for w in hit_test(s, (900, 730))] == [11]
    assert hit_test(s, (901, 730)) == []
    assert hit_test(s, (0, 0)) == []


def test_center_rounds_half_up():
    assert bbox_center((740, 630, 900, 730)) == (820, 680)
    assert bbox_center((0, 0, 1, 3)) == (1, 2)


def test_empty_screen_digest():
    assert hash_screen(Screen()) == EMPTY_DIGEST
    assert digest_hex(EMPTY_DIGEST) == "cbf29ce484222325"


def test_digest_ignores_order_and_interactivity():
    a = WidgetRecord(1, "text", "x", False, (0, 0, 100, 100))
    b = WidgetRecord(2, "button", "y", True, (200, 200, 300, 300))
    assert hash_screen(Screen((a, b))) == hash_screen(Screen((b, a)))
    a2 = WidgetRecord(1, "text", "x", True, (0, 0, 100, 100))
    assert hash_screen(Screen((a2, b))) == hash_screen(Screen((a, b)))


def test_digest_sensitive_to_content_and_cells():
    a = WidgetRecord(1, "text", "x", False, (0, 0, 100, 100))
    assert hash_screen(Screen((a,))) != hash_screen(Screen((WidgetRecord(1, "text", "z", False, (0, 0, 100, 100)),)))
    assert hash_screen(Screen((a,))) != hash_screen(Screen((WidgetRecord(1, "text", "x", False, (0, 0, 150, 100)),)))


def test_canonical_bytes_layout():
    w = WidgetRecord(3, "icon", "YouTube", True, (740, 630, 900, 730))
    assert canonical_bytes(Screen((w,))) == "icon\x1fYouTube\x1f14,12,18,14\x1e".encode()
    assert quantize(1000) == 19
    assert quantize(49) == 0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 18), st.integers(0, 18), st.integers(0, 49), st.integers(0, 49))
def test_digest_stable_within_quantization_cell(cx, cy, dx, dy):
    base = (cx * 50, cy * 50, cx * 50 + 50, cy * 50 + 50)
    moved = (base[0] + dx, base[1] + dy, base[2] + min(dx, 49), base[3] + min(dy, 49))
    # both corners stay inside their original cells
    if quantize(moved[2]) != quantize(base[2]) or quantize(moved[3]) != quantize(base[3]):
        return
    s1 = Screen((WidgetRecord(0, "button", "ok", True, base),))
    s2 = Screen((WidgetRecord(0, "button", "ok", True, moved),))
    assert hash_screen(s1) == hash_screen(s2)
