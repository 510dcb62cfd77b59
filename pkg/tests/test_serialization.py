from __future__ import annotations

import json

import pytest

from app.errors import MetricError, SchemaError
from app.generators import rp2_minimal, torus_grid
from app.serialization import (
    complex_hash,
    dumps,
    format_length,
    metric_document,
    metric_hash,
    parse_document,
    parse_text,
    trace_csv,
)
from app.z2_algebra import cohomology_basis


def test_document_round_trip_is_exact() -> None:
    mc = torus_grid(3, 4, 1.0 / 3.0, 0.1)
    alpha = cohomology_basis(mc.complex, 1).representatives[0]

    parsed = parse_text(dumps(metric_document(mc, {"alpha": alpha})))

    assert parsed.complex == mc.complex
    assert parsed.metric == mc.metric
    assert parsed.cochains["alpha"] == alpha


def test_lengths_keep_seventeen_significant_digits() -> None:
    assert float(format_length(0.1 + 0.2)) == 0.1 + 0.2
    assert format_length(1.0) == "1"


def test_decimal_strings_and_numbers_are_both_accepted() -> None:
    doc = {"vertices": 3, "triangles": [[0, 1, 2]], "edges": [[0, 1], [0, 2], [1, 2]], "lengths": ["3", 4.0, "5"]}

    parsed = parse_document(doc)

    assert parsed.metric is not None
    assert parsed.metric.lengths == (3.0, 4.0, 5.0)


def test_malformed_json_reports_position() -> None:
    with pytest.raises(SchemaError) as exc_info:
        parse_text('{"vertices": 3,')
    assert exc_info.value.code == "SCHEMA_INVALID"
    assert exc_info.value.details["line"] == 1


def test_non_object_documents_are_rejected() -> None:
    with pytest.raises(SchemaError):
        parse_text("[1, 2, 3]")


@pytest.mark.parametrize(
    ("doc", "pointer"),
    [
        ({"vertices": -1}, "/vertices"),
        ({"vertices": 3, "edges": [[0, 1, 2]]}, "/edges/0"),
        ({"vertices": 2, "edges": [[0, 1]], "lengths": ["abc"]}, "/lengths/0"),
        ({"vertices": 2, "edges": [[0, 1]], "lengths": ["inf"]}, "/lengths/0"),
        ({"vertices": 2, "edges": [[0, 1]], "cochains": {"a": {"degree": 1, "support": [4]}}}, "/cochains/a/support/0"),
        ({"vertices": 2, "colour": "red"}, "/colour"),
    ],
)
def test_schema_errors_carry_a_pointer(doc, pointer) -> None:
    with pytest.raises(SchemaError) as exc_info:
        parse_document(doc)
    assert exc_info.value.details["pointer"] == pointer


def test_structural_and_metric_errors_keep_their_codes() -> None:
    with pytest.raises(MetricError) as exc_info:
        parse_document({"vertices": 3, "edges": [[0, 1], [0, 2], [1, 2]], "triangles": [[0, 1, 2]], "lengths": [1, 1, 3]})
    assert exc_info.value.code == "TRIANGLE_INEQUALITY"


def test_missing_lengths_block_metric_operations() -> None:
    parsed = parse_document({"vertices": 2, "edges": [[0, 1]]})

    with pytest.raises(SchemaError) as exc_info:
        parsed.metric_complex
    assert exc_info.value.details["pointer"] == "/lengths"


def test_hashes_are_stable_and_separate_topology_from_metric() -> None:
    mc = rp2_minimal()

    assert complex_hash(mc.complex) == complex_hash(rp2_minimal(2.0).complex)
    assert metric_hash(mc.metric) != metric_hash(rp2_minimal(2.0).metric)
    assert metric_hash(mc.metric) == metric_hash(parse_text(dumps(metric_document(mc))).metric)


def test_dumps_is_canonical() -> None:
    text = dumps({"b": 1, "a": [1, 2]})

    assert text == '{"a": [1, 2], "b": 1}'
    assert json.loads(text) == {"a": [1, 2], "b": 1}


def test_trace_csv_leaves_infeasible_ratios_empty() -> None:
    text = trace_csv(
        [
            {"iteration": 0, "ratio": 0.75, "accepted": True},
            {"iteration": 1, "ratio": None, "accepted": False},
        ]
    )

    assert text.splitlines() == ["iteration,ratio,accepted", "0,0.75,1", "1,,0"]
