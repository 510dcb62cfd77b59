from __future__ import annotations

import io
import json
from typing import List, Optional, Tuple

import pytest

from app.cli import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK, main


def run(argv: List[str], stdin: Optional[str] = None) -> Tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdin=io.StringIO(stdin or ""), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def generated(*argv: str) -> str:
    code, out, _ = run(["generate", *argv])
    assert code == EXIT_OK
    return out


def error_payload(err: str) -> dict:
    return json.loads(err.strip().splitlines()[-1])["error"]


def test_generate_then_systole_through_stdin() -> None:
    doc = generated("torus_grid", "8", "8", "1", "1")

    code, out, _ = run(["systole"], stdin=doc)

    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["value"] == pytest.approx(1.0)
    assert payload["kind"] == "edge-exact"


def test_generate_compact_is_one_line() -> None:
    out = generated("rp2_minimal", "--compact")

    assert len(out.strip().splitlines()) == 1
    assert json.loads(out)["vertices"] == 6


def test_generate_rejects_bad_parameters() -> None:
    code, _, err = run(["generate", "torus_grid", "2", "4"])

    assert code == EXIT_ERROR
    assert error_payload(err)["code"] == "INVALID_PARAMETERS"

    code, _, err = run(["generate", "wedge"])
    assert code == EXIT_ERROR


def test_generate_from_spec() -> None:
    spec = json.dumps({"family": "disjoint_union", "operands": [{"family": "rp2_minimal"}, {"family": "rp2_minimal"}]})

    doc = generated("disjoint_union", "--spec", spec)

    assert json.loads(doc)["vertices"] == 12


def test_validate_and_homology() -> None:
    doc = generated("klein_grid", "4", "4")

    code, out, _ = run(["validate"], stdin=doc)
    assert code == EXIT_OK
    assert json.loads(out)["euler_characteristic"] == 0

    code, out, _ = run(["homology"], stdin=doc)
    assert code == EXIT_OK
    assert json.loads(out)["betti"] == [0, 2, 1]


def test_validate_reports_structural_errors() -> None:
    doc = json.dumps({"vertices": 3, "edges": [[0, 1], [1, 2]], "triangles": [[0, 1, 2]]})

    code, _, err = run(["validate"], stdin=doc)

    assert code == EXIT_ERROR
    assert error_payload(err)["code"] == "MISSING_FACE"


def test_verify_main_is_inconclusive_on_coarse_rp2() -> None:
    code, out, _ = run(["verify", "main"], stdin=generated("rp2_minimal"))

    assert code == EXIT_INCONCLUSIVE
    report = json.loads(out)
    assert report["verdict"] == "inconclusive"
    assert report["report_id"]


def test_verify_main_on_a_graph_is_an_error() -> None:
    code, _, err = run(["verify", "main"], stdin=generated("cycle", "5"))

    assert code == EXIT_ERROR
    assert error_payload(err)["code"] == "NO_CUP_WITNESS"


def test_verify_text_output() -> None:
    code, out, _ = run(["verify", "main", "--text"], stdin=generated("torus_grid", "6", "6"))

    assert code == EXIT_OK
    assert "verdict: holds" in out


def test_cup_witness_exit_codes() -> None:
    code, out, _ = run(["cup-witness"], stdin=generated("torus_grid", "4", "4"))
    assert code == EXIT_OK
    assert len(json.loads(out)["witness"]["indices"]) == 2

    code, out, _ = run(["cup-witness"], stdin=generated("sphere", "octahedron"))
    assert code == EXIT_INCONCLUSIVE
    assert json.loads(out) == {"witness": None}


def test_realize_reports_components() -> None:
    code, out, _ = run(["realize"], stdin=generated("rp2_minimal"))

    assert code == EXIT_OK
    payload = json.loads(out)
    assert [c["name"] for c in payload["components"]] == ["projective plane"]
    assert payload["witness_component"] == 0


def test_length_series_and_unknown_cocycle() -> None:
    doc = generated("rp2_minimal")

    code, out, _ = run(["length", "--series", "--level", "2"], stdin=doc)
    assert code == EXIT_OK
    values = json.loads(out)["values"]
    assert len(values) == 3
    assert values[0] == pytest.approx(3.0)

    code, _, err = run(["length", "--cocycle", "missing"], stdin=doc)
    assert code == EXIT_ERROR
    assert error_payload(err)["details"]["pointer"] == "/cochains/missing"


def test_ball_brackets() -> None:
    code, out, _ = run(["ball", "--radii", "0.1", "0.2", "--level", "1"], stdin=generated("torus_grid", "6", "6"))

    assert code == EXIT_OK
    balls = json.loads(out)["balls"]
    assert [b["radius"] for b in balls] == [0.1, 0.2]
    assert all(b["lower"] <= b["upper"] for b in balls)


def test_optimize_writes_csv(tmp_path) -> None:
    csv_path = tmp_path / "trace.csv"

    code, out, _ = run(
        ["optimize", "--budget", "5", "--seed", "1", "--csv", str(csv_path)], stdin=generated("torus_grid", "3", "3")
    )

    assert code == EXIT_OK
    summary = json.loads(out)
    assert summary["iterations"] == 5
    assert summary["metric"]["vertices"] == 9
    assert csv_path.read_text().splitlines()[0] == "iteration,ratio,accepted"


def test_schema_errors_carry_pointers() -> None:
    code, _, err = run(["systole"], stdin='{"vertices": 2, "edges": [[0, 1]], "lengths": ["x"]}')

    assert code == EXIT_ERROR
    payload = error_payload(err)
    assert payload["code"] == "SCHEMA_INVALID"
    assert payload["details"]["pointer"] == "/lengths/0"


def test_batch_verify_over_a_directory(tmp_path) -> None:
    (tmp_path / "a_torus.json").write_text(generated("torus_grid", "6", "6"))
    (tmp_path / "b_rp2.json").write_text(generated("rp2_minimal"))

    code, out, _ = run(["verify", "main", "--all", str(tmp_path), "--workers", "1"])

    assert code == EXIT_INCONCLUSIVE
    results = json.loads(out)["results"]
    assert [r["verdict"] for r in results] == ["holds", "inconclusive"]


def test_batch_verify_reports_errors_per_file(tmp_path) -> None:
    (tmp_path / "bad.json").write_text("{")
    (tmp_path / "good.json").write_text(generated("torus_grid", "6", "6"))

    code, out, _ = run(["verify", "main", "--all", str(tmp_path), "--workers", "1"])

    assert code == EXIT_ERROR
    results = json.loads(out)["results"]
    assert results[0]["error"]["code"] == "SCHEMA_INVALID"
    assert results[1]["verdict"] == "holds"


@pytest.mark.parametrize(
    "argv",
    [["verify", "nonsense"], ["optimize", "--budget", "many"], ["no-such-command"]],
)
def test_usage_errors_exit_with_the_error_code(argv) -> None:
    code, _, _ = run(argv, stdin=generated("torus_grid", "3", "3"))

    assert code == EXIT_ERROR
    assert code != EXIT_INCONCLUSIVE


def test_help_exits_cleanly() -> None:
    code, _, _ = run(["--help"])

    assert code == EXIT_OK


def test_optimize_accepts_the_no_strict_floors_flag() -> None:
    code, out, _ = run(["optimize", "--budget", "0", "--no-strict-floors"], stdin=generated("rp2_minimal"))

    assert code == EXIT_OK
    assert json.loads(out)["floor_flags"] == []
