from __future__ import annotations

import math

import numpy as np
import pytest

from app.complex_core import (
    Complex2,
    MetricComplex,
    PLMetric,
    check_metric,
    euler_characteristic,
    relabel,
    total_area,
    triangle_area,
    triangle_slack,
    validate,
)
from app.errors import ComplexValidationError, DegenerateTriangleError, MetricError
from app.generators import rp2_minimal, torus_grid


def single_triangle() -> Complex2:
    return Complex2.from_simplices(3, [(0, 1, 2)])


def test_from_simplices_closes_faces_and_sorts() -> None:
    complex_ = Complex2.from_simplices(4, [(2, 1, 0), (3, 2, 1)])

    assert complex_.edges == ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))
    assert complex_.triangles == ((0, 1, 2), (1, 2, 3))
    assert validate(complex_).valid


def test_incidence_columns_are_front_back_long() -> None:
    complex_ = single_triangle()

    front, back, long = complex_.incidence[0]

    assert complex_.edges[front] == (0, 1)
    assert complex_.edges[back] == (1, 2)
    assert complex_.edges[long] == (0, 2)


def test_edge_ids_marks_missing_pairs() -> None:
    complex_ = single_triangle()

    ids = complex_.edge_ids(np.array([[1, 2], [0, 3], [0, 1]]))

    assert ids.tolist() == [2, -1, 0]


@pytest.mark.parametrize(
    ("complex_", "code"),
    [
        (Complex2(3, ((0, 1), (1, 2)), ((0, 1, 2),)), "MISSING_FACE"),
        (Complex2(2, ((0, 1), (0, 1))), "DUPLICATE_SIMPLEX"),
        (Complex2(2, ((0, 2),)), "INDEX_OUT_OF_RANGE"),
        (Complex2(2, ((1, 1),)), "DEGENERATE_SIMPLEX"),
        (Complex2(2, ((1, 0),)), "UNORDERED_SIMPLEX"),
    ],
)
def test_validate_reports_first_violation(complex_: Complex2, code: str) -> None:
    result = validate(complex_)

    assert not result.valid
    assert result.code == code
    with pytest.raises(ComplexValidationError) as exc_info:
        result.raise_for_error()
    assert exc_info.value.code == code


def test_validate_reports_connectivity() -> None:
    two_edges = Complex2(4, ((0, 1), (2, 3)))

    assert validate(two_edges).connected is False
    assert validate(single_triangle()).connected is True
    assert validate(two_edges, check_connectivity=False).connected is None


def test_euler_characteristic_of_standard_surfaces() -> None:
    assert euler_characteristic(rp2_minimal().complex) == 1
    assert euler_characteristic(torus_grid(4, 4).complex) == 0


def test_triangle_area_matches_heron() -> None:
    assert triangle_area(3.0, 4.0, 5.0) == pytest.approx(6.0)
    assert triangle_area(1.0, 1.0, 1.0) == pytest.approx(math.sqrt(3.0) / 4.0)


def test_triangle_area_is_accurate_for_needles() -> None:
    eps = 1e-9
    # Isosceles needle with base eps: area ~ eps/2 * sqrt(1 - eps^2/4).
    assert triangle_area(1.0, 1.0, eps) == pytest.approx(0.5 * eps, rel=1e-6)


def test_triangle_area_rejects_degenerate_sides() -> None:
    with pytest.raises(DegenerateTriangleError):
        triangle_area(1.0, 2.0, 3.0)


def test_check_metric_codes() -> None:
    complex_ = single_triangle()

    with pytest.raises(MetricError) as exc_info:
        check_metric(complex_, PLMetric((1.0, 1.0)))
    assert exc_info.value.code == "LENGTH_COUNT_MISMATCH"

    with pytest.raises(MetricError) as exc_info:
        check_metric(complex_, PLMetric((1.0, 0.0, 1.0)))
    assert exc_info.value.code == "NON_POSITIVE_LENGTH"
    assert exc_info.value.details["edge"] == 1

    with pytest.raises(MetricError) as exc_info:
        check_metric(complex_, PLMetric((1.0, 1.0, 2.0)))
    assert exc_info.value.code == "TRIANGLE_INEQUALITY"


def test_metric_complex_area_and_scaling() -> None:
    mc = MetricComplex.build(single_triangle(), [3.0, 4.0, 5.0])

    assert total_area(mc) == pytest.approx(6.0)
    assert total_area(mc.scaled(2.0)) == pytest.approx(24.0)


def test_flat_torus_area_is_product_of_sides() -> None:
    mc = torus_grid(5, 4, 2.0, 3.0)

    assert total_area(mc) == pytest.approx(6.0)


def test_triangle_slack_is_a_third_for_equilateral() -> None:
    slack = triangle_slack(single_triangle(), np.ones(3))

    assert slack.tolist() == pytest.approx([1.0 / 3.0])


def test_relabel_tracks_edges() -> None:
    complex_ = single_triangle()

    renamed, old_for_new = relabel(complex_, [2, 1, 0])

    assert renamed.triangles == ((0, 1, 2),)
    for new_idx, old_idx in enumerate(old_for_new.tolist()):
        u, v = complex_.edges[old_idx]
        assert tuple(sorted((2 - u, 2 - v))) == renamed.edges[new_idx]
