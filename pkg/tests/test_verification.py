from __future__ import annotations

import math

import pytest

from app.complex_core import total_area
from app.errors import EmptyGridError, NoNontrivialClassError, NoWitnessError, SystolicError
from app.generators import (
    cycle,
    disjoint_union,
    genus_g_polygon,
    hex_torus,
    klein_grid,
    rp2_minimal,
    sphere,
    torus_grid,
    wedge,
)
from app.models.reports import VerificationReport
from app.verification import (
    LANDMARKS,
    check_soundness,
    default_radii,
    verify,
    verify_ball_growth,
    verify_cover_bound,
    verify_main_inequality,
    weaker,
)
from app.z2_algebra import Z2Vector, coboundary


def test_landmark_constants() -> None:
    assert LANDMARKS["loewner_torus"] == pytest.approx(0.8660254)
    assert LANDMARKS["pu_projective_plane"] == pytest.approx(0.6366198)
    assert LANDMARKS["maximal_cup_length"] == 0.5


def test_weaker_picks_the_least_conclusive_verdict() -> None:
    assert weaker("holds", "holds-with-slack") == "holds-with-slack"
    assert weaker("holds", "inconclusive", "holds") == "inconclusive"


def test_main_inequality_holds_on_the_flat_torus() -> None:
    mc = torus_grid(8, 8)

    report = verify_main_inequality(mc)

    assert report.verdict == "holds"
    assert report.margin == pytest.approx(0.5)
    assert report.l_hat == pytest.approx(1.0)
    assert report.systole is not None and report.systole.kind == "edge-exact"
    assert report.realization is not None
    assert report.realization["components"][0]["name"] == "torus"
    assert report.realization["surface_area"] == pytest.approx(1.0)


def test_main_inequality_is_inconclusive_on_coarse_rp2() -> None:
    mc = rp2_minimal()

    report = verify_main_inequality(mc, level=0)

    # Ten unit equilateral triangles against half of 3^2.
    assert report.margin == pytest.approx(10 * math.sqrt(3.0) / 4.0 - 4.5)
    assert report.verdict == "inconclusive"
    assert any("refinement" in note for note in report.notes)


def test_main_inequality_margin_improves_with_refinement() -> None:
    mc = rp2_minimal()

    report = verify_main_inequality(mc, level=2)

    margins = {p.level: p.margin for p in report.pairs}
    assert margins[2] >= margins[1] >= margins[0]
    assert report.l_hat <= 3.0


def test_main_inequality_is_scale_invariant() -> None:
    mc = torus_grid(6, 6)

    small = verify_main_inequality(mc)
    large = verify_main_inequality(mc.scaled(2.0))

    assert large.margin == pytest.approx(4.0 * small.margin)
    assert large.verdict == small.verdict
    assert large.complex_hash == small.complex_hash
    assert large.metric_hash != small.metric_hash


def test_main_inequality_needs_a_witness() -> None:
    with pytest.raises(NoWitnessError) as exc_info:
        verify_main_inequality(sphere("octahedron"))
    assert exc_info.value.code == "NO_CUP_WITNESS"
    with pytest.raises(NoWitnessError):
        verify_main_inequality(wedge(cycle(3), cycle(5)))


def test_ball_growth_on_the_flat_torus() -> None:
    mc = torus_grid(8, 8)

    report = verify_ball_growth(mc, [0.1, 0.2, 0.3, 0.4], level=1)

    assert report.verdict in ("holds", "holds-with-slack")
    assert report.radius == pytest.approx(0.5 * 0.95)
    assert len(report.balls) == 4
    for ball in report.balls:
        assert ball.lower <= math.pi * ball.radius**2 + 1e-9
        assert ball.target == pytest.approx(2.0 * ball.radius**2)


def test_ball_growth_skips_radii_outside_the_range() -> None:
    mc = torus_grid(8, 8)

    report = verify_ball_growth(mc, [0.2, 0.9], level=1, center=0)

    assert [b.radius for b in report.balls] == [0.2]
    assert report.center == 0
    assert any("skipped" in note for note in report.notes)


def test_ball_growth_rejects_empty_grids() -> None:
    mc = torus_grid(8, 8)

    with pytest.raises(EmptyGridError):
        verify_ball_growth(mc, [])
    with pytest.raises(EmptyGridError):
        verify_ball_growth(mc, [2.0, 3.0])


def test_default_radii_lie_inside_the_range() -> None:
    radii = default_radii(torus_grid(8, 8))

    assert len(radii) == 4
    assert all(0.0 < r < 0.475 for r in radii)


def test_cover_bound_on_the_flat_torus() -> None:
    mc = torus_grid(8, 8)

    report = verify_cover_bound(mc, level=1, radii=[0.1, 0.2, 0.3])

    assert report.inequality == "cover"
    assert report.verdict in ("holds", "holds-with-slack")
    assert report.margin == pytest.approx(0.5)
    assert report.cover is not None
    assert report.cover["connected"] is True
    assert report.cover["systole_at_least_base"] is True
    assert report.cover["two_r_hat"] >= 1.0 - 1e-9


def test_cover_bound_with_a_coboundary_falls_back_to_the_main_inequality() -> None:
    mc = torus_grid(4, 4)
    alpha = coboundary(mc.complex, Z2Vector.from_support(mc.complex, 0, [0]))

    report = verify_cover_bound(mc, alpha)

    assert report.inequality == "cover"
    assert any("coboundary" in note for note in report.notes)


def test_cover_of_rp2_is_not_surface_like_at_cochain_level() -> None:
    mc = rp2_minimal()

    report = verify_cover_bound(mc)

    assert report.verdict == "inconclusive"
    assert "cover not surface-like at cochain level" in report.notes


def test_cover_bound_needs_a_class() -> None:
    with pytest.raises(NoNontrivialClassError):
        verify_cover_bound(sphere("octahedron"))


def test_verify_dispatches_and_rejects_unknown_inequalities() -> None:
    mc = torus_grid(6, 6)

    assert verify(mc, "main").inequality == "main"
    with pytest.raises(SystolicError) as exc_info:
        verify(mc, "isoperimetric")
    assert exc_info.value.code == "INVALID_PARAMETERS"


def test_reports_round_trip_through_json() -> None:
    report = verify_main_inequality(torus_grid(6, 6))

    again = VerificationReport.model_validate_json(report.model_dump_json())

    assert again == report


def test_soundness_check_rejects_an_unsupported_pass() -> None:
    report = verify_main_inequality(torus_grid(6, 6))
    forged = report.model_copy(update={"margin": -0.1})

    with pytest.raises(SystolicError) as exc_info:
        check_soundness(forged)
    assert exc_info.value.code == "UNSOUND_VERDICT"


def test_area_reported_matches_total_area() -> None:
    mc = torus_grid(5, 7, 2.0, 1.5)

    assert verify_main_inequality(mc).area == pytest.approx(total_area(mc))


def test_cover_of_rp2_reports_a_simply_connected_cover() -> None:
    report = verify_cover_bound(rp2_minimal())

    assert report.cover is not None
    assert report.cover["connected"] is True
    assert report.cover["systole"] is None
    assert report.cover["vertices"] == 12


def test_main_inequality_holds_on_rp2_after_refinement() -> None:
    report = verify_main_inequality(rp2_minimal(), level=3)

    assert report.verdict == "holds"
    assert report.l_hat == pytest.approx(2.5)
    # Half of 2.5 squared is 3.125, below the area 10 * sqrt(3) / 4.
    assert 0.5 * report.l_hat**2 < report.area


def test_cover_bound_with_the_zero_cocycle_matches_the_main_inequality() -> None:
    mc = torus_grid(6, 6)

    cover = verify_cover_bound(mc, Z2Vector.zeros(mc.complex, 1))
    main = verify_main_inequality(mc)

    assert cover.margin == pytest.approx(main.margin)
    assert cover.verdict == main.verdict


@pytest.mark.parametrize(
    ("builder", "level"),
    [
        (lambda: torus_grid(4, 4), 0),
        (lambda: klein_grid(4, 4), 0),
        (lambda: hex_torus(3, 3), 0),
        (rp2_minimal, 3),
        (lambda: genus_g_polygon(2), 0),
        (lambda: wedge(torus_grid(3, 3), torus_grid(3, 3)), 0),
        (lambda: disjoint_union(torus_grid(3, 3), rp2_minimal()), 0),
    ],
)
def test_main_inequality_holds_across_generator_families(builder, level) -> None:
    mc = builder()

    report = verify_main_inequality(mc, level=level)

    assert report.verdict == "holds"
    assert report.area == pytest.approx(total_area(mc))
    finals = [p for p in report.pairs if p.level == level]
    assert finals
    assert all(p.bound == pytest.approx(0.5 * min(p.length_alpha, p.length_beta) ** 2) for p in finals)
    assert report.margin == pytest.approx(min(p.margin for p in finals))


def test_ball_growth_at_level_three_tracks_euclidean_discs() -> None:
    mc = torus_grid(8, 8)
    r = 0.3

    report = verify_ball_growth(mc, [r], level=3)

    assert report.verdict == "holds"
    (ball,) = report.balls
    disc = math.pi * r**2
    assert ball.lower <= disc + 1e-9 <= ball.upper + 2e-9
    assert ball.lower >= 0.9 * disc
    assert ball.upper <= 1.1 * disc


def test_ball_growth_radius_uses_the_shortest_witness_pair() -> None:
    mc = disjoint_union(torus_grid(6, 6, 3.0, 3.0), torus_grid(4, 4))

    report = verify_ball_growth(mc, [0.1, 0.2])
    radii = default_radii(mc)

    assert report.l_hat == pytest.approx(1.0)
    assert report.radius == pytest.approx(0.5 * 0.95)
    assert all(r < 0.475 for r in radii)
