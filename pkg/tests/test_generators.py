from __future__ import annotations

import math

import pytest

from app.complex_core import euler_characteristic, total_area, validate
from app.errors import GeneratorError
from app.generators import (
    cone,
    cycle,
    disjoint_union,
    generate,
    genus_g_polygon,
    hex_torus,
    klein_grid,
    rp2_minimal,
    sphere,
    torus_grid,
    wedge,
)
from app.models.documents import GeneratorSpec
from app.z2_algebra import betti_numbers


def f_vector(mc):
    c = mc.complex
    return c.vertex_count, c.edge_count, c.triangle_count


def test_rp2_is_the_six_vertex_projective_plane() -> None:
    mc = rp2_minimal()

    assert f_vector(mc) == (6, 15, 10)
    assert euler_characteristic(mc.complex) == 1
    assert total_area(mc) == pytest.approx(10 * math.sqrt(3.0) / 4.0)


def test_torus_grid_counts_and_area() -> None:
    mc = torus_grid(4, 4)

    assert f_vector(mc) == (16, 48, 32)
    assert euler_characteristic(mc.complex) == 0
    assert betti_numbers(mc.complex) == (0, 2, 1)
    assert total_area(mc) == pytest.approx(1.0)


def test_klein_grid_is_a_flat_klein_bottle() -> None:
    mc = klein_grid(4, 6, 2.0, 3.0)

    assert euler_characteristic(mc.complex) == 0
    assert total_area(mc) == pytest.approx(6.0)


@pytest.mark.parametrize("genus", [1, 2, 3])
def test_genus_polygon_f_vector(genus: int) -> None:
    mc = genus_g_polygon(genus)

    assert f_vector(mc) == (16 * genus + 2, 54 * genus, 36 * genus)
    assert euler_characteristic(mc.complex) == 2 - 2 * genus
    assert betti_numbers(mc.complex)[1] == 2 * genus


def test_hex_torus_is_equilateral() -> None:
    mc = hex_torus(3, 3, 2.0)

    assert mc.lengths.tolist() == pytest.approx([2.0] * mc.complex.edge_count)
    assert euler_characteristic(mc.complex) == 0


def test_cone_over_a_cycle_is_a_disk() -> None:
    mc = cone(cycle(5, 2.0))

    assert f_vector(mc) == (6, 10, 5)
    assert betti_numbers(mc.complex) == (0, 0, 0)


def test_wedge_and_disjoint_union_vertex_counts() -> None:
    a, b = torus_grid(3, 3), rp2_minimal()

    assert wedge(a, b).complex.vertex_count == 9 + 6 - 1
    assert disjoint_union(a, b).complex.vertex_count == 9 + 6
    assert validate(wedge(a, b).complex).connected is True
    assert validate(disjoint_union(a, b).complex).connected is False


@pytest.mark.parametrize(
    "builder",
    [
        lambda: torus_grid(3, 5, 2.0, 1.0),
        lambda: klein_grid(3, 3),
        rp2_minimal,
        lambda: genus_g_polygon(2),
        lambda: sphere("tetrahedron"),
        lambda: sphere("octahedron"),
        lambda: cycle(7),
        lambda: hex_torus(4, 3),
    ],
)
def test_every_generator_builds_a_valid_complex(builder) -> None:
    assert validate(builder().complex).valid


@pytest.mark.parametrize(
    ("call", "parameter"),
    [
        (lambda: torus_grid(2, 4), "m"),
        (lambda: klein_grid(4, 1), "n"),
        (lambda: torus_grid(4, 4, -1.0), "lx"),
        (lambda: genus_g_polygon(0), "genus"),
        (lambda: cycle(2), "n"),
        (lambda: sphere("cube"), "kind"),
        (lambda: cone(rp2_minimal()), "operand"),
    ],
)
def test_out_of_range_parameters(call, parameter) -> None:
    with pytest.raises(GeneratorError) as exc_info:
        call()
    assert exc_info.value.code == "INVALID_PARAMETERS"
    assert exc_info.value.details["parameter"] == parameter
    assert "range" in exc_info.value.details


def test_generate_from_nested_spec() -> None:
    spec = GeneratorSpec.model_validate(
        {
            "family": "wedge",
            "operands": [
                {"family": "torus_grid", "m": 3, "n": 3},
                {"family": "cone", "operands": [{"family": "cycle", "n": 4}]},
            ],
        }
    )

    mc = generate(spec)

    assert mc.complex.vertex_count == 9 + 5 - 1
    assert betti_numbers(mc.complex) == (0, 2, 1)


def test_generate_requires_family_parameters() -> None:
    with pytest.raises(GeneratorError) as exc_info:
        generate(GeneratorSpec(family="torus_grid", m=4))
    assert exc_info.value.details["parameter"] == "n"

    with pytest.raises(GeneratorError):
        generate(GeneratorSpec(family="wedge", operands=[GeneratorSpec(family="rp2_minimal")]))
