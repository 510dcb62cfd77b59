"""Derivative-free search for small systolic ratios Area / sys² over edge lengths."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.complex_core import MetricComplex, total_area, triangle_areas, triangle_slack
from app.config import settings
from app.errors import ComplexValidationError, NoNontrivialClassError, OptimizerError
from app.metric_geometry import RefinementLadder, sheet_swap_length, z2_systole
from app.models.reports import IterationRecord, TraceSummary
from app.serialization import complex_hash, format_length, trace_csv
from app.surface_realization import classify_surface
from app.verification import LANDMARKS
from app.z2_algebra import cohomology_basis, cup_length_witness, reduce_support

logger = logging.getLogger("systolic.optimizer")

FLOOR_TOLERANCE = 0.01


@dataclass(frozen=True)
class OptimizerConfig:
    budget: int = 10_000
    scale: float = 0.05
    scale_decay: float = 0.999
    min_scale: float = 1e-3
    seed: int = 0
    level: int = 0
    epsilon: float = 1e-3
    # None or 0 keeps the search greedy.
    temperature: Optional[float] = 0.01
    certify_levels: int = 1
    certify_steiner_points: int = 7
    strict_floors: bool = True

    def __post_init__(self) -> None:
        checks = [
            ("budget", self.budget >= 0, ">= 0"),
            ("scale", self.scale > 0, "> 0"),
            ("scale_decay", 0 < self.scale_decay <= 1, "in (0, 1]"),
            ("min_scale", 0 < self.min_scale <= self.scale, "in (0, scale]"),
            ("level", 0 <= self.level <= settings.max_level, f"in [0, {settings.max_level}]"),
            ("epsilon", 0 < self.epsilon < 1.0 / 3.0, "in (0, 1/3)"),
            ("certify_levels", self.certify_levels >= 0, ">= 0"),
            ("certify_steiner_points", self.certify_steiner_points >= 0, ">= 0"),
        ]
        if self.temperature is not None:
            checks.append(("temperature", self.temperature >= 0, ">= 0"))
        for name, ok, expected in checks:
            if not ok:
                raise OptimizerError(
                    "invalid optimizer parameter",
                    code="INVALID_PARAMETERS",
                    details={"parameter": name, "range": expected, "value": getattr(self, name)},
                )

    @classmethod
    def from_settings(cls, **overrides: object) -> "OptimizerConfig":
        values = {
            "budget": settings.optimizer_budget,
            "scale": settings.optimizer_scale,
            "scale_decay": settings.optimizer_scale_decay,
            "min_scale": settings.optimizer_min_scale,
            "seed": settings.optimizer_seed,
            "level": settings.default_level,
            "epsilon": settings.optimizer_epsilon,
            "temperature": settings.optimizer_temperature,
            "certify_levels": settings.optimizer_certify_levels,
            "certify_steiner_points": settings.certify_steiner_points,
            "strict_floors": settings.optimizer_strict_floors,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)  # type: ignore[arg-type]

    def scale_at(self, iteration: int) -> float:
        return max(self.min_scale, self.scale * self.scale_decay**iteration)

    def temperature_at(self, iteration: int) -> Optional[float]:
        if not self.temperature:
            return None
        return self.temperature * self.scale_decay**iteration


def systolic_ratio(
    mc: MetricComplex,
    level: int = 0,
    *,
    ladder: Optional[RefinementLadder] = None,
    steiner_points: int = 0,
) -> float:
    """Area divided by the squared Z2-systole estimate at ``level``; invariant under scaling.

    With ``steiner_points`` the systole is measured on Steiner graphs, which
    converge to the true systole as the level grows.
    """
    systole = z2_systole(mc, level=level, ladder=ladder, steiner_points=steiner_points)
    return total_area(mc) / systole.value**2


class _RatioEvaluator:
    """Ratio of base lengths against a fixed refinement; cocycles are transported once."""

    def __init__(self, mc: MetricComplex, level: int) -> None:
        basis = cohomology_basis(mc.complex, 1)
        if basis.rank == 0:
            raise NoNontrivialClassError("no non-trivial Z2 classes")
        self.mc = mc
        self.level = level
        self.ladder = RefinementLadder(mc)
        self.refined = self.ladder.complex_at(level)
        self.bits = [
            self.ladder.transport(reduce_support(mc.complex, alpha), level).bits for alpha in basis.representatives
        ]

    def systole(self, lengths: np.ndarray) -> float:
        refined_lengths = self.ladder.lengths_at(self.level, lengths)
        return min(sheet_swap_length(self.refined, refined_lengths, bits)[0] for bits in self.bits)

    def ratio(self, lengths: np.ndarray) -> Tuple[float, float]:
        area = math.fsum(triangle_areas(self.mc.complex, lengths).tolist())
        systole = self.systole(lengths)
        return area / systole**2, systole


def topology_floors(mc: MetricComplex) -> Dict[str, float]:
    """Known lower bounds on the systolic ratio that apply to this complex."""
    floors: Dict[str, float] = {}
    if cup_length_witness(mc.complex) is not None:
        floors["maximal_cup_length"] = LANDMARKS["maximal_cup_length"]
    try:
        classification = classify_surface(mc.complex)
    except ComplexValidationError:
        return floors
    if len(classification.components) != 1:
        return floors
    comp = classification.components[0]
    if comp.euler_characteristic <= 0:
        floors["aspherical_surfaces"] = LANDMARKS["aspherical_surfaces"]
    if comp.orientable and comp.euler_characteristic == 0:
        floors["loewner_torus"] = LANDMARKS["loewner_torus"]
    if not comp.orientable and comp.euler_characteristic == 1:
        floors["pu_projective_plane"] = LANDMARKS["pu_projective_plane"]
    return floors


@dataclass
class OptimizationTrace:
    complex_hash: str
    config: OptimizerConfig
    records: List[IterationRecord] = field(default_factory=list)
    initial_ratio: float = math.nan
    best_ratio: float = math.nan
    best_lengths: Tuple[float, ...] = ()
    certified_level: int = 0
    certified_ratio: float = math.nan
    floors: Dict[str, float] = field(default_factory=dict)
    floor_flags: List[str] = field(default_factory=list)

    def best_metric(self, mc: MetricComplex) -> MetricComplex:
        return mc.with_lengths(self.best_lengths)

    @property
    def accepted_ratios(self) -> List[float]:
        return [r.ratio for r in self.records if r.accepted and r.ratio is not None]

    def to_summary(self, run_id: Optional[str] = None) -> TraceSummary:
        return TraceSummary(
            run_id=run_id,
            complex_hash=self.complex_hash,
            seed=self.config.seed,
            level=self.config.level,
            iterations=self.config.budget,
            initial_ratio=self.initial_ratio,
            best_ratio=self.best_ratio,
            certified_level=self.certified_level,
            certified_ratio=self.certified_ratio,
            best_lengths=[format_length(x) for x in self.best_lengths],
            floors=dict(self.floors),
            floor_flags=list(self.floor_flags),
            records=list(self.records),
        )

    def to_csv(self) -> str:
        return trace_csv(r.model_dump() for r in self.records)


def _check_feasible(mc: MetricComplex, epsilon: float) -> None:
    slack = triangle_slack(mc.complex, mc.lengths)
    if slack.size and slack.min() < epsilon:
        worst = int(np.argmin(slack))
        raise OptimizerError(
            "initial metric violates the triangle-inequality floor",
            code="INFEASIBLE_METRIC",
            details={"triangle": worst, "slack": float(slack[worst]), "epsilon": epsilon},
        )


def _accept(current: float, candidate: float, temperature: Optional[float], rng: np.random.Generator) -> bool:
    if candidate < current:
        return True
    if temperature is None:
        return False
    return bool(rng.random() < math.exp((current - candidate) / temperature))


def optimize_metric(mc: MetricComplex, config: Optional[OptimizerConfig] = None) -> OptimizationTrace:
    """Multiplicative per-edge perturbations, greedy or annealed, normalised to systole 1.

    The search runs at ``config.level``; the best metric is re-measured
    ``config.certify_levels`` levels finer and compared with the floors known
    for the topology.
    """
    config = config or OptimizerConfig.from_settings()
    _check_feasible(mc, config.epsilon)
    evaluator = _RatioEvaluator(mc, config.level)
    rng = np.random.default_rng(config.seed)

    ratio, systole = evaluator.ratio(mc.lengths)
    current = mc.lengths / systole
    current_ratio = ratio
    best_lengths, best_ratio = current.copy(), ratio
    trace = OptimizationTrace(complex_hash=complex_hash(mc.complex), config=config, initial_ratio=ratio)
    trace.records.append(IterationRecord(iteration=0, ratio=ratio, accepted=True))
    logger.info("optimizer_started seed=%s level=%s budget=%s ratio=%s", config.seed, config.level, config.budget, ratio)

    for iteration in range(1, config.budget + 1):
        step = config.scale_at(iteration)
        candidate = current * np.exp(step * rng.standard_normal(current.shape[0]))
        slack = triangle_slack(mc.complex, candidate)
        if slack.size and slack.min() < config.epsilon:
            trace.records.append(IterationRecord(iteration=iteration, ratio=None, accepted=False))
            continue
        cand_ratio, cand_systole = evaluator.ratio(candidate)
        accepted = _accept(current_ratio, cand_ratio, config.temperature_at(iteration), rng)
        trace.records.append(IterationRecord(iteration=iteration, ratio=cand_ratio, accepted=accepted))
        if not accepted:
            continue
        current = candidate / cand_systole
        current_ratio = cand_ratio
        if cand_ratio < best_ratio:
            best_lengths, best_ratio = current.copy(), cand_ratio
            logger.debug("optimizer_improved iteration=%s ratio=%s", iteration, cand_ratio)

    trace.best_ratio = best_ratio
    trace.best_lengths = tuple(float(x) for x in best_lengths)
    best = mc.with_lengths(trace.best_lengths)
    trace.certified_level = config.level + config.certify_levels
    trace.certified_ratio = systolic_ratio(best, trace.certified_level, steiner_points=config.certify_steiner_points)
    trace.floors = topology_floors(mc)
    trace.floor_flags = sorted(
        name for name, floor in trace.floors.items() if trace.certified_ratio < floor - FLOOR_TOLERANCE
    )
    logger.info(
        "optimizer_finished seed=%s best_ratio=%s certified_ratio=%s flags=%s",
        config.seed,
        best_ratio,
        trace.certified_ratio,
        ",".join(trace.floor_flags) or "-",
    )
    if trace.floor_flags and config.strict_floors:
        raise OptimizerError(
            "certified ratio below a known lower bound",
            code="FLOOR_VIOLATION",
            details={"certified_ratio": trace.certified_ratio, "floors": {k: trace.floors[k] for k in trace.floor_flags}},
        )
    return trace


def _run_restart(args: Tuple[MetricComplex, OptimizerConfig]) -> OptimizationTrace:
    mc, config = args
    return optimize_metric(mc, config)


def optimize_restarts(
    mc: MetricComplex,
    config: OptimizerConfig,
    seeds: Sequence[int],
    *,
    workers: Optional[int] = None,
) -> List[OptimizationTrace]:
    """Independent runs for several seeds, in parallel; results follow the order of ``seeds``."""
    jobs = [(mc, replace(config, seed=int(seed))) for seed in seeds]
    workers = workers or settings.batch_workers
    if workers <= 1 or len(jobs) <= 1:
        return [_run_restart(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_restart, jobs))
