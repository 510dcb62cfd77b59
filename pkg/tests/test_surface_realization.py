from __future__ import annotations

import itertools

import numpy as np
import pytest

from app.complex_core import Complex2, MetricComplex, total_area, validate
from app.errors import ComplexValidationError, DegreeMismatchError, NotACycleError, TrivialClassError
from app.generators import disjoint_union, genus_g_polygon, klein_grid, rp2_minimal, sphere, torus_grid, wedge
from app.metric_geometry import length_of_class
from app.surface_realization import (
    check_closed_surface,
    classify_surface,
    pullback_cochain,
    pullback_metric,
    realize_cycle,
    witness_component,
)
from app.z2_algebra import (
    Z2Vector,
    boundary_matrix,
    cohomology_basis,
    cup_length_witness,
    cup_product,
    evaluate,
    homology_basis,
    is_coboundary,
    nullspace,
)


def fundamental(complex_: Complex2) -> Z2Vector:
    return Z2Vector(2, np.ones(complex_.triangle_count, dtype=bool))


def assert_order_preserving(realization) -> None:
    images = realization.vertex_map[realization.surface.triangle_array]
    assert (np.diff(images, axis=1) > 0).all()


@pytest.mark.parametrize(
    ("builder", "chi", "orientable", "name"),
    [
        (lambda: torus_grid(4, 4), 0, True, "torus"),
        (lambda: klein_grid(4, 4), 0, False, "Klein bottle"),
        (rp2_minimal, 1, False, "projective plane"),
        (lambda: sphere("octahedron"), 2, True, "sphere"),
        (lambda: genus_g_polygon(2), -2, True, "orientable genus 2"),
    ],
)
def test_classify_standard_surfaces(builder, chi, orientable, name) -> None:
    classification = classify_surface(builder().complex)

    assert len(classification.components) == 1
    comp = classification.components[0]
    assert comp.euler_characteristic == chi
    assert comp.orientable is orientable
    assert comp.name == name


def test_check_closed_surface_rejects_boundary() -> None:
    disk = Complex2.from_simplices(3, [(0, 1, 2)])

    with pytest.raises(ComplexValidationError) as exc_info:
        check_closed_surface(disk)
    assert exc_info.value.code == "NOT_A_CLOSED_SURFACE"


def test_realizing_a_surface_returns_the_surface() -> None:
    complex_ = rp2_minimal().complex

    realization = realize_cycle(complex_, fundamental(complex_))

    assert realization.surface.triangle_count == complex_.triangle_count
    assert realization.pushforward(complex_) == fundamental(complex_)
    assert [c.name for c in realization.components] == ["projective plane"]
    assert_order_preserving(realization)


def test_wedge_vertex_is_split_into_two_spheres() -> None:
    complex_ = wedge(sphere("octahedron"), sphere("tetrahedron")).complex
    cycle = fundamental(complex_)

    realization = realize_cycle(complex_, cycle)

    assert sorted(c.name for c in realization.components) == ["sphere", "sphere"]
    assert realization.surface.vertex_count == complex_.vertex_count + 1
    assert realization.classification.euler_characteristic == 4
    assert realization.pushforward(complex_) == cycle


def test_random_cycles_of_sphere_soup_realize_and_push_forward() -> None:
    soup = disjoint_union(disjoint_union(sphere("octahedron"), sphere("tetrahedron")), sphere("octahedron"))
    complex_ = soup.complex
    basis = homology_basis(complex_, 2)
    rng = np.random.default_rng(2024)

    for _ in range(10):
        pick = rng.random(basis.rank) < 0.5
        if not pick.any():
            continue
        bits = np.zeros(complex_.triangle_count, dtype=bool)
        for rep, use in zip(basis.representatives, pick):
            if use:
                bits ^= rep.bits
        cycle = Z2Vector(2, bits)

        realization = realize_cycle(complex_, cycle, pairing="random", seed=int(rng.integers(1 << 30)))

        assert realization.pushforward(complex_) == cycle
        assert validate(realization.surface).valid
        check_closed_surface(realization.surface)
        assert_order_preserving(realization)


def test_realization_is_natural_for_cup_products() -> None:
    complex_ = torus_grid(4, 4).complex
    witness = cup_length_witness(complex_)
    assert witness is not None

    realization = realize_cycle(complex_, witness.cycle)
    upstairs = cup_product(
        realization.surface,
        pullback_cochain(realization, witness.alpha),
        pullback_cochain(realization, witness.beta),
    )

    assert upstairs == pullback_cochain(realization, cup_product(complex_, witness.alpha, witness.beta))
    assert witness_component(realization, witness.alpha, witness.beta) == 0


def test_pulled_back_classes_stay_non_trivial() -> None:
    complex_ = genus_g_polygon(1).complex
    witness = cup_length_witness(complex_)
    assert witness is not None

    realization = realize_cycle(complex_, witness.cycle)

    assert not is_coboundary(realization.surface, pullback_cochain(realization, witness.alpha))


def test_pullback_metric_copies_image_lengths() -> None:
    mc = torus_grid(3, 4, 3.0, 2.0)

    realization = realize_cycle(mc.complex, fundamental(mc.complex))
    metric = pullback_metric(realization, mc.metric)

    assert np.allclose(metric.array, mc.lengths[realization.edge_map])


def test_realize_cycle_errors() -> None:
    complex_ = rp2_minimal().complex

    with pytest.raises(TrivialClassError):
        realize_cycle(complex_, Z2Vector.zeros(complex_, 2))
    with pytest.raises(NotACycleError):
        realize_cycle(complex_, Z2Vector.from_support(complex_, 2, [0]))
    with pytest.raises(DegreeMismatchError):
        realize_cycle(complex_, Z2Vector.zeros(complex_, 1))


def random_complex(rng: np.random.Generator, vertices: int, density: float) -> Complex2:
    triples = [t for t in itertools.combinations(range(vertices), 3) if rng.random() < density]
    return Complex2.from_simplices(vertices, triples[:100])


def random_combination(rng: np.random.Generator, rows: np.ndarray) -> np.ndarray:
    pick = rng.random(len(rows)) < 0.5
    return np.bitwise_xor.reduce(rows[pick], axis=0) if pick.any() else np.zeros(rows.shape[1], dtype=bool)


def assert_structural_invariants(complex_: Complex2, cycle: Z2Vector, realization) -> None:
    surface = realization.surface
    assert validate(surface).valid
    check_closed_surface(surface)
    assert realization.pushforward(complex_) == cycle
    live = realization.triangle_map[realization.triangle_map >= 0]
    assert np.unique(live).size == live.size
    images = realization.vertex_map[surface.triangle_array]
    assert (np.diff(images, axis=1) >= 0).all()


@pytest.mark.parametrize(("vertices", "density"), [(6, 0.7), (8, 0.5), (11, 0.35)])
def test_random_cycles_of_random_complexes_realize(vertices, density) -> None:
    rng = np.random.default_rng(vertices)
    checked = 0

    while checked < 15:
        complex_ = random_complex(rng, vertices, density)
        cycles = nullspace(boundary_matrix(complex_, 2).data)
        if len(cycles) == 0:
            continue
        bits = random_combination(rng, cycles)
        if not bits.any():
            continue
        cycle = Z2Vector(2, bits)

        realization = realize_cycle(complex_, cycle, pairing="random", seed=checked, max_attempts=4)

        assert_structural_invariants(complex_, cycle, realization)
        cocycles = cohomology_basis(complex_, 1).representatives
        if cocycles:
            rows = np.array([c.bits for c in cocycles])
            alpha = Z2Vector(1, random_combination(rng, rows))
            beta = Z2Vector(1, random_combination(rng, rows))
            upstairs = cup_product(
                realization.surface, pullback_cochain(realization, alpha), pullback_cochain(realization, beta)
            )
            assert evaluate(upstairs, realization.fundamental_class()) == evaluate(
                cup_product(complex_, alpha, beta), cycle
            )
        checked += 1


def test_subdivided_realization_of_rp2() -> None:
    mc = rp2_minimal()
    cycle = fundamental(mc.complex)

    realization = realize_cycle(mc.complex, cycle, max_attempts=0)

    assert realization.subdivided
    assert_structural_invariants(mc.complex, cycle, realization)
    assert [c.name for c in realization.components] == ["projective plane"]
    # Barycentric subdivision: six triangles per copy.
    assert realization.surface.triangle_count == 6 * mc.complex.triangle_count
    assert realization.area(mc.areas) == pytest.approx(total_area(mc))


def test_subdivided_realization_pulls_back_flat_lengths() -> None:
    mc = torus_grid(3, 4, 3.0, 2.0)
    cycle = fundamental(mc.complex)

    realization = realize_cycle(mc.complex, cycle, max_attempts=0)
    pulled = MetricComplex(realization.surface, pullback_metric(realization, mc.metric))

    assert total_area(pulled) == pytest.approx(total_area(mc))
    assert realization.area(mc.areas) == pytest.approx(total_area(mc))
    assert pulled.lengths.max() <= mc.lengths.max() + 1e-12


def test_subdivided_realization_keeps_the_cup_witness() -> None:
    complex_ = torus_grid(4, 4).complex
    witness = cup_length_witness(complex_)
    assert witness is not None

    realization = realize_cycle(complex_, witness.cycle, max_attempts=0)

    assert realization.subdivided
    assert witness_component(realization, witness.alpha, witness.beta) == 0
    assert not is_coboundary(realization.surface, pullback_cochain(realization, witness.alpha))


@pytest.mark.parametrize("builder", [lambda: klein_grid(4, 4, 2.0, 1.0), lambda: torus_grid(3, 5, 1.0, 2.0)])
def test_pulled_back_loops_keep_their_length_downstairs(builder) -> None:
    mc = builder()
    realization = realize_cycle(mc.complex, fundamental(mc.complex))
    pulled = MetricComplex(realization.surface, pullback_metric(realization, mc.metric))
    assert not realization.subdivided

    for alpha in cohomology_basis(mc.complex, 1).representatives:
        upstairs = length_of_class(pulled, pullback_cochain(realization, alpha))
        gamma = list(upstairs.cycle)
        image = realization.edge_map[gamma]
        pushed = Z2Vector.from_support(mc.complex, 1, image.tolist())

        assert (image >= 0).all()
        assert evaluate(alpha, pushed) == 1
        assert pulled.lengths[gamma].sum() == pytest.approx(mc.lengths[pushed.support].sum())
        assert upstairs.value == pytest.approx(length_of_class(mc, alpha).value)
