"""Triple parsing, aggregation filters, and the JSON document round trip."""

import json

import numpy as np
import pytest

from helpers import make
from streamshare import (
    CellBudgetError,
    EmptyAfterFilterError,
    ParseError,
    SchemaError,
    TripleRecord,
    default_ids,
    ingest_triples,
    load_document,
    read_triples,
    save_document,
)

SAMPLE = [
    "user\tartist\tcount",
    "alice\tradiohead\t12",
    "alice\tbjork\t3",
    "",
    "bob\tradiohead\t1",
]


def test_read_triples_skips_header_and_blanks():
    recs = list(read_triples(SAMPLE))
    assert len(recs) == 3
    assert recs[0] == TripleRecord("alice", "radiohead", 12.0)
    assert recs[2].user_id == "bob"


def test_read_triples_comma_and_no_header():
    recs = list(read_triples(["u1,a1,5\n", "u1,a2,0.5\r\n"]))
    assert [r.count for r in recs] == [5.0, 0.5]


def test_read_triples_errors_carry_location():
    with pytest.raises(ParseError) as exc:
        list(read_triples(["a,b,1", "too,few"]))
    assert exc.value.line_no == 2
    assert "expected 3 fields" in str(exc.value)
    # a later non-numeric count is an error, not a second header
    with pytest.raises(ParseError):
        list(read_triples(["a,b,1", "c,d,lots"]))
    with pytest.raises(ParseError):
        list(read_triples(["a,,3"]))
    with pytest.raises(ParseError):
        list(read_triples(["a,b,-1"]))
    with pytest.raises(ParseError):
        list(read_triples(["a,b,inf"]))


def _sample_records():
    return [
        TripleRecord("alice", "radiohead", 10),
        TripleRecord("alice", "bjork", 2),
        TripleRecord("bob", "radiohead", 1),
        TripleRecord("bob", "radiohead", 4),  # duplicate pair, sums
        TripleRecord("carol", "lowfi", 0.5),
    ]


def test_ingest_aggregates_in_first_appearance_order():
    res = ingest_triples(_sample_records())
    assert res.user_ids == ("alice", "bob", "carol")
    assert res.artist_ids == ("radiohead", "bjork", "lowfi")
    expected = np.array([[10, 2, 0], [5, 0, 0], [0, 0, 0.5]])
    assert np.array_equal(res.instance.weights, expected)
    assert res.instance.alpha == 1.0


def test_ingest_min_user_total_filter():
    res = ingest_triples(_sample_records(), min_user_total=1.0)
    assert res.user_ids == ("alice", "bob")
    with pytest.raises(EmptyAfterFilterError):
        ingest_triples(_sample_records(), min_user_total=100.0)


def test_ingest_top_artists_ranked_by_total():
    res = ingest_triples(_sample_records(), top_artists=2)
    # totals: radiohead 15, bjork 2, lowfi 0.5
    assert res.artist_ids == ("radiohead", "bjork")
    # carol only streamed lowfi, so she drops out with it
    assert res.user_ids == ("alice", "bob")


def test_ingest_top_artists_tie_keeps_earlier():
    recs = [TripleRecord("u", "first", 3), TripleRecord("u", "second", 3)]
    res = ingest_triples(recs, top_artists=1)
    assert res.artist_ids == ("first",)


def test_ingest_cell_budget():
    recs = [TripleRecord(f"u{i}", f"a{i}", 1) for i in range(8)]
    with pytest.raises(CellBudgetError):
        ingest_triples(recs, cell_budget=63)
    assert ingest_triples(recs, cell_budget=64).instance.n_users == 8


def test_default_ids():
    users, artists = default_ids(make([[1, 2], [3, 4], [5, 6]]))
    assert users == ("u0", "u1", "u2")
    assert artists == ("a0", "a1")


def test_document_round_trip(tmp_path):
    inst = make([[3, 1], [0, 1]], alpha=0.7)
    path = tmp_path / "doc.json"
    save_document(path, inst, user_ids=("x", "y"), artist_ids=("p", "q"))
    res = load_document(path)
    assert np.array_equal(res.instance.weights, inst.weights)
    assert res.instance.alpha == 0.7
    assert res.user_ids == ("x", "y")
    assert res.artist_ids == ("p", "q")


def test_save_defaults_ids_and_checks_lengths(tmp_path):
    inst = make([[1, 1]])
    path = tmp_path / "doc.json"
    save_document(path, inst)
    assert load_document(path).user_ids == ("u0",)
    with pytest.raises(SchemaError):
        save_document(path, inst, user_ids=("only",), artist_ids=("too", "many", "ids"))


def _write(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    return path


def test_load_document_schema_errors(tmp_path):
    good = {
        "version": 1,
        "alpha": 1.0,
        "user_ids": ["u0"],
        "artist_ids": ["a0", "a1"],
        "weights": [[1.0, 2.0]],
    }
    load_document(_write(tmp_path, good))

    for mutation in (
        {"version": 2},
        {"alpha": "high"},
        {"weights": [[1.0], [2.0, 3.0]]},  # ragged
        {"weights": [1.0, 2.0]},  # not a matrix
        {"user_ids": ["u0", "u1"]},  # length mismatch
    ):
        with pytest.raises(SchemaError):
            load_document(_write(tmp_path, {**good, **mutation}))

    for missing in ("alpha", "user_ids", "artist_ids", "weights"):
        doc = {k: v for k, v in good.items() if k != missing}
        with pytest.raises(SchemaError):
            load_document(_write(tmp_path, doc))

    nan_doc = tmp_path / "nan.json"
    nan_doc.write_text('{"version": 1, "alpha": 1.0, "user_ids": ["u0"], "artist_ids": ["a0"], "weights": [[NaN]]}')
    with pytest.raises(SchemaError):
        load_document(nan_doc)

    not_json = tmp_path / "broken.json"
    not_json.write_text("{nope")
    with pytest.raises(SchemaError):
        load_document(not_json)

    array_root = tmp_path / "arr.json"
    array_root.write_text("[1, 2, 3]")
    with pytest.raises(SchemaError):
        load_document(array_root)


def test_load_document_runs_instance_validation(tmp_path):
    doc = {
        "version": 1,
        "alpha": 1.0,
        "user_ids": ["u0"],
        "artist_ids": ["a0"],
        "weights": [[0.0]],
    }
    with pytest.raises(ValueError):  # zero row comes from core validation
        load_document(_write(tmp_path, doc))
