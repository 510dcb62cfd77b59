from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

Verdict = Literal["holds", "holds-with-slack", "inconclusive"]
Inequality = Literal["main", "ball-growth", "cover"]


class LengthRecord(BaseModel):
    value: float
    kind: Literal["edge-exact", "upper-bound"]
    level: int
    cycle: List[int] = Field(default_factory=list)
    class_index: Optional[int] = None


class WitnessRecord(BaseModel):
    indices: List[int]
    alpha: List[int]
    beta: List[int]


class PairMeasurement(BaseModel):
    """Area against half the squared witness-pair length at one refinement level."""

    indices: List[int]
    level: int
    length_alpha: float
    length_beta: float
    l_hat: float
    bound: float
    margin: float


class BallRecord(BaseModel):
    radius: float
    lower: float
    upper: float
    target: float
    lower_margin: float
    upper_margin: float


class VerificationReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    report_version: int
    inequality: Inequality
    systole_kind: Literal["z2-homology"] = "z2-homology"
    complex_hash: str
    metric_hash: str
    level: int
    witness: Optional[WitnessRecord] = None
    area: float
    pairs: List[PairMeasurement] = Field(default_factory=list)
    l_hat: Optional[float] = None
    systole: Optional[LengthRecord] = None
    systole_margin: Optional[float] = None
    radius: Optional[float] = None
    center: Optional[int] = None
    balls: List[BallRecord] = Field(default_factory=list)
    lower_ratio: Optional[float] = None
    upper_margin: Optional[float] = None
    realization: Optional[Dict[str, Any]] = None
    cover: Optional[Dict[str, Any]] = None
    margin: Optional[float] = None
    verdict: Verdict
    landmarks: Dict[str, float] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    report_id: Optional[str] = None
    trace_id: Optional[str] = None


class IterationRecord(BaseModel):
    iteration: int
    ratio: Optional[float]
    accepted: bool


class TraceSummary(BaseModel):
    run_id: Optional[str] = None
    complex_hash: str
    seed: int
    level: int
    iterations: int
    initial_ratio: float
    best_ratio: float
    certified_level: int
    certified_ratio: float
    best_lengths: List[str]
    floors: Dict[str, float] = Field(default_factory=dict)
    floor_flags: List[str] = Field(default_factory=list)
    records: List[IterationRecord] = Field(default_factory=list)
