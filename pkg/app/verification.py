"""Numerical verdicts for the area inequality, ball growth and the double-cover bound.

Edge-path lengths overestimate the true infima, so comparing Area with half
the squared estimate is sound evidence whenever it passes. Ball areas enter
verdicts only through their lower brackets.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.complex_core import MetricComplex, total_area
from app.config import settings
from app.errors import (
    EmptyGridError,
    NoNontrivialClassError,
    NoWitnessError,
    RealizationError,
    SystolicError,
)
from app.metric_geometry import (
    BallGraph,
    LengthEstimate,
    RefinementLadder,
    bracket_from_distances,
    build_double_cover,
    length_of_class,
    z2_systole,
)
from app.models.reports import (
    BallRecord,
    LengthRecord,
    PairMeasurement,
    VerificationReport,
    WitnessRecord,
)
from app.serialization import complex_hash, metric_hash
from app.surface_realization import realize_cycle, witness_component
from app.z2_algebra import (
    CohomologyBasis,
    CupWitness,
    Z2Vector,
    all_witness_pairs,
    cohomology_basis,
    cup_length_witness,
    is_coboundary,
    require_cocycle,
)

logger = logging.getLogger("systolic.verification")

LANDMARKS: Dict[str, float] = {
    "loewner_torus": math.sqrt(3.0) / 2.0,
    "pu_projective_plane": 2.0 / math.pi,
    "aspherical_surfaces": 0.75,
    "maximal_cup_length": 0.5,
    "non_free_groups": 0.25,
}

SYSTOLE_NOTE = (
    "systole proxy: shortest Z2-homologically non-trivial edge cycle; it bounds the true systole from above"
)
_RANK = {"holds": 2, "holds-with-slack": 1, "inconclusive": 0}


def weaker(*verdicts: str) -> str:
    return min(verdicts, key=lambda v: _RANK[v])


def _length_record(est: LengthEstimate) -> LengthRecord:
    return LengthRecord(
        value=est.value, kind=est.kind, level=est.level, cycle=list(est.cycle), class_index=est.class_index
    )


def _witness_record(witness: CupWitness) -> WitnessRecord:
    return WitnessRecord(indices=list(witness.indices), alpha=witness.alpha.support, beta=witness.beta.support)


def _require_witness(mc: MetricComplex) -> Tuple[CohomologyBasis, CupWitness, List[Tuple[int, int]]]:
    basis = cohomology_basis(mc.complex, 1)
    witness = cup_length_witness(mc.complex, basis)
    if witness is None:
        raise NoWitnessError("no maximal cup-length witness: the area inequality hypothesis is unsatisfied")
    return basis, witness, all_witness_pairs(mc.complex, basis)


class _ClassLengths:
    """Per-class length estimates across levels, forced non-increasing in the level."""

    def __init__(self, mc: MetricComplex, basis: CohomologyBasis, ladder: RefinementLadder) -> None:
        self.mc = mc
        self.basis = basis
        self.ladder = ladder
        self._cache: Dict[Tuple[int, int], LengthEstimate] = {}

    def get(self, index: int, level: int) -> LengthEstimate:
        key = (index, level)
        if key not in self._cache:
            est = length_of_class(
                self.mc, self.basis.representatives[index], level=level, ladder=self.ladder, checked=True
            )
            if level > 0:
                prev = self.get(index, level - 1)
                if prev.value < est.value:
                    est = LengthEstimate(prev.value, est.kind, level, est.cycle, est.source)
            self._cache[key] = LengthEstimate(est.value, est.kind, est.level, est.cycle, est.source, index)
        return self._cache[key]

    def systole(self, level: int) -> LengthEstimate:
        return min((self.get(i, level) for i in range(self.basis.rank)), key=lambda e: e.value)

    def shortest_witness(self, pairs: Sequence[Tuple[int, int]], level: int) -> float:
        """Smallest class length over every witness pair; bounds the admissible ball radius."""
        return min(min(self.get(i, level).value, self.get(j, level).value) for i, j in pairs)


def _realization_summary(mc: MetricComplex, witness: CupWitness) -> Optional[Dict[str, object]]:
    try:
        realization = realize_cycle(mc.complex, witness.cycle)
        component = witness_component(realization, witness.alpha, witness.beta)
    except (RealizationError, NoWitnessError) as exc:
        logger.warning("witness_realization_failed code=%s", exc.code)
        return None
    return {
        "components": [c.as_dict() for c in realization.components],
        "witness_component": component,
        "surface_area": realization.area(mc.areas, component),
        "attempts": realization.attempts,
        "subdivided": realization.subdivided,
    }


def _base_report(mc: MetricComplex, inequality: str, level: int) -> Dict[str, object]:
    return {
        "report_version": settings.report_version,
        "inequality": inequality,
        "complex_hash": complex_hash(mc.complex),
        "metric_hash": metric_hash(mc.metric),
        "level": level,
        "area": total_area(mc),
        "landmarks": dict(LANDMARKS),
    }


def check_soundness(report: VerificationReport) -> VerificationReport:
    """A passing verdict must be backed by the sound side of every bracket it uses."""
    if report.verdict == "inconclusive":
        return report
    if report.inequality in ("main", "cover") and report.margin is not None and report.margin < 0:
        raise SystolicError("passing verdict with a negative margin", code="UNSOUND_VERDICT")
    if report.inequality == "main":
        final = [p for p in report.pairs if p.level == report.level]
        if any(report.area < p.bound for p in final):
            raise SystolicError("passing verdict not supported by every witness pair", code="UNSOUND_VERDICT")
    slack = 1.0 - settings.verdict_slack
    for ball in report.balls:
        need = ball.target if report.verdict == "holds" else ball.target * slack
        if ball.lower < need:
            raise SystolicError("ball verdict relies on an upper bracket", code="UNSOUND_VERDICT")
    return report


def verify_main_inequality(
    mc: MetricComplex,
    *,
    level: int = 0,
    ladder: Optional[RefinementLadder] = None,
) -> VerificationReport:
    """Area >= L̂²/2 for every cup-product witness pair, L̂ the shorter refined class length."""
    basis, witness, pairs = _require_witness(mc)
    ladder = ladder or RefinementLadder(mc)
    lengths = _ClassLengths(mc, basis, ladder)
    area = total_area(mc)

    measurements: List[PairMeasurement] = []
    for k in range(level + 1):
        for i, j in pairs:
            la, lb = lengths.get(i, k).value, lengths.get(j, k).value
            l_hat = min(la, lb)
            bound = 0.5 * l_hat**2
            measurements.append(
                PairMeasurement(
                    indices=[i, j], level=k, length_alpha=la, length_beta=lb, l_hat=l_hat, bound=bound, margin=area - bound
                )
            )
    final = [m for m in measurements if m.level == level]
    worst = min(final, key=lambda m: m.margin)
    systole = lengths.systole(level)
    verdict = "holds" if worst.margin >= 0 else "inconclusive"
    notes = [SYSTOLE_NOTE]
    if verdict == "inconclusive":
        notes.append(f"margin negative at level {level}; lengths shrink under further refinement")
    realization = _realization_summary(mc, witness)
    logger.info("main_inequality_verified level=%s margin=%s verdict=%s", level, worst.margin, verdict)
    report = VerificationReport(
        **_base_report(mc, "main", level),
        witness=_witness_record(witness),
        pairs=measurements,
        l_hat=worst.l_hat,
        systole=_length_record(systole),
        systole_margin=area - 0.5 * systole.value**2,
        realization=realization,
        margin=worst.margin,
        verdict=verdict,
        notes=notes,
    )
    return check_soundness(report)


def _ball_growth(
    mc: MetricComplex,
    ladder: RefinementLadder,
    radii: Sequence[float],
    level: int,
    center: Optional[int],
    steiner_points: Optional[int],
) -> Tuple[int, List[BallRecord], float]:
    refined = ladder.level(level).mc
    graph = BallGraph(refined, settings.steiner_points if steiner_points is None else steiner_points)
    candidates = [center] if center is not None else list(range(mc.complex.vertex_count))
    dist = graph.distances_from(candidates)
    best: Optional[Tuple[float, int, List[BallRecord]]] = None
    for row, x in enumerate(candidates):
        records = []
        for r in radii:
            bracket = bracket_from_distances(graph, dist[row], r)
            target = 2.0 * r * r
            records.append(
                BallRecord(
                    radius=r,
                    lower=bracket.lower,
                    upper=bracket.upper,
                    target=target,
                    lower_margin=bracket.lower - target,
                    upper_margin=bracket.upper - target,
                )
            )
        ratio = min(rec.lower / rec.target for rec in records)
        if best is None or ratio > best[0]:
            best = (ratio, x, records)
    assert best is not None
    return best[1], best[2], best[0]


def _ball_verdict(ratio: float) -> str:
    if ratio >= 1.0:
        return "holds"
    if ratio >= 1.0 - settings.verdict_slack:
        return "holds-with-slack"
    return "inconclusive"


def _radii_in_range(radii: Sequence[float], limit: float, notes: List[str]) -> List[float]:
    kept = [float(r) for r in radii if 0.0 < r < limit]
    skipped = [float(r) for r in radii if not 0.0 < r < limit]
    if skipped:
        notes.append(f"radii outside (0, {limit:.6g}) skipped: {skipped}")
    if not kept:
        raise EmptyGridError("empty grid: no sampled radius inside the admissible range", details={"limit": limit})
    return kept


def verify_ball_growth(
    mc: MetricComplex,
    radii: Sequence[float],
    *,
    level: int = 0,
    center: Optional[int] = None,
    ladder: Optional[RefinementLadder] = None,
    steiner_points: Optional[int] = None,
) -> VerificationReport:
    """Search a vertex x with Area B(x, r) >= 2r² for every sampled r in (0, R)."""
    if len(radii) == 0:
        raise EmptyGridError("empty grid")
    basis, witness, pairs = _require_witness(mc)
    ladder = ladder or RefinementLadder(mc)
    lengths = _ClassLengths(mc, basis, ladder)
    l_hat = lengths.shortest_witness(pairs, level)
    radius = 0.5 * l_hat * (1.0 - settings.verdict_slack)
    notes = [SYSTOLE_NOTE, "upper brackets are reported but never support a verdict"]
    kept = _radii_in_range(radii, radius, notes)
    x, records, ratio = _ball_growth(mc, ladder, kept, level, center, steiner_points)
    verdict = _ball_verdict(ratio)
    logger.info("ball_growth_verified level=%s center=%s ratio=%s verdict=%s", level, x, ratio, verdict)
    report = VerificationReport(
        **_base_report(mc, "ball-growth", level),
        witness=_witness_record(witness),
        l_hat=l_hat,
        radius=radius,
        center=x,
        balls=records,
        lower_ratio=ratio,
        upper_margin=min(rec.upper_margin for rec in records),
        margin=min(rec.lower_margin for rec in records),
        verdict=verdict,
        notes=notes,
    )
    return check_soundness(report)


def verify_cover_bound(
    mc: MetricComplex,
    alpha: Optional[Z2Vector] = None,
    *,
    level: int = 0,
    radii: Optional[Sequence[float]] = None,
    ladder: Optional[RefinementLadder] = None,
    steiner_points: Optional[int] = None,
) -> VerificationReport:
    """Ball growth and the area bound obtained through the double cover defined by α."""
    basis = cohomology_basis(mc.complex, 1)
    if basis.rank == 0:
        raise NoNontrivialClassError("no non-trivial cocycle")
    if alpha is None:
        alpha = basis.representatives[0]
    require_cocycle(mc.complex, alpha)
    ladder = ladder or RefinementLadder(mc)

    if is_coboundary(mc.complex, alpha):
        report = verify_main_inequality(mc, level=level, ladder=ladder)
        notes = report.notes + [
            "cocycle is a coboundary: the cover is two copies of the complex, main inequality checked instead"
        ]
        return report.model_copy(update={"inequality": "cover", "notes": notes})

    cover = build_double_cover(mc, alpha)
    upstairs = cover.cover
    base_lengths = _ClassLengths(mc, basis, ladder)
    s_hat = base_lengths.systole(level)
    up_basis = cohomology_basis(upstairs.complex, 1)
    cover_info: Dict[str, object] = {
        "vertices": upstairs.complex.vertex_count,
        "edges": upstairs.complex.edge_count,
        "triangles": upstairs.complex.triangle_count,
        "connected": cover.connected,
        "cocycle": alpha.support,
        "systole": None,
        "systole_at_least_base": None,
    }
    if up_basis.rank > 0:
        # Covers without H^1, such as the sphere over RP2, keep systole None.
        cover_systole = z2_systole(upstairs, up_basis, level=level)
        cover_info["systole"] = cover_systole.value
        cover_info["systole_at_least_base"] = cover_systole.value >= s_hat.value * (1.0 - settings.stability_tolerance)
    notes = [SYSTOLE_NOTE]
    base = _base_report(mc, "cover", level)

    witness_up = cup_length_witness(upstairs.complex, up_basis)
    if witness_up is None:
        notes.append("cover not surface-like at cochain level")
        return check_soundness(
            VerificationReport(
                **base, systole=_length_record(s_hat), cover=cover_info, verdict="inconclusive", notes=notes
            )
        )

    up_ladder = RefinementLadder(upstairs)
    la = length_of_class(upstairs, witness_up.alpha, level=level, ladder=up_ladder, checked=True).value
    lb = length_of_class(upstairs, witness_up.beta, level=level, ladder=up_ladder, checked=True).value
    two_r_hat = min(la, lb)
    scale = min(two_r_hat, s_hat.value)
    area = float(base["area"])
    scalar_margin = area - 0.5 * scale**2
    scalar_verdict = "holds" if scalar_margin >= 0 else "inconclusive"
    cover_info.update({"length_alpha": la, "length_beta": lb, "two_r_hat": two_r_hat})

    radius = 0.5 * scale * (1.0 - settings.verdict_slack)
    if radii is None:
        radii = [radius * f for f in (0.2, 0.4, 0.6, 0.8)]
    kept = _radii_in_range(radii, radius, notes)
    x, records, ratio = _ball_growth(mc, ladder, kept, level, None, steiner_points)
    ball_verdict = _ball_verdict(ratio)
    verdict = weaker(scalar_verdict, ball_verdict)
    if cover_info["systole_at_least_base"] is False:
        notes.append("cover systole estimate fell below the base estimate")
    logger.info(
        "cover_bound_verified level=%s scalar_margin=%s ratio=%s verdict=%s", level, scalar_margin, ratio, verdict
    )
    report = VerificationReport(
        **base,
        witness=WitnessRecord(
            indices=list(witness_up.indices), alpha=witness_up.alpha.support, beta=witness_up.beta.support
        ),
        l_hat=two_r_hat,
        systole=_length_record(s_hat),
        radius=radius,
        center=x,
        balls=records,
        lower_ratio=ratio,
        upper_margin=min(rec.upper_margin for rec in records),
        cover=cover_info,
        margin=scalar_margin,
        verdict=verdict,
        notes=notes,
    )
    return check_soundness(report)


def verify(
    mc: MetricComplex,
    inequality: str,
    *,
    level: int = 0,
    radii: Optional[Sequence[float]] = None,
    alpha: Optional[Z2Vector] = None,
) -> VerificationReport:
    if inequality == "main":
        return verify_main_inequality(mc, level=level)
    if inequality == "ball-growth":
        return verify_ball_growth(mc, radii if radii is not None else default_radii(mc, level), level=level)
    if inequality == "cover":
        return verify_cover_bound(mc, alpha, level=level, radii=radii)
    raise SystolicError("unknown inequality", code="INVALID_PARAMETERS", details={"inequality": inequality})


def default_radii(mc: MetricComplex, level: int = 0) -> List[float]:
    """Four radii spread over (0, R), R half the shortest witness class length."""
    basis, _, pairs = _require_witness(mc)
    lengths = _ClassLengths(mc, basis, RefinementLadder(mc))
    l_hat = lengths.shortest_witness(pairs, level)
    radius = 0.5 * l_hat * (1.0 - settings.verdict_slack)
    return [float(r) for r in np.linspace(0.0, radius, 6)[1:-1]]
