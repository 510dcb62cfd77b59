from __future__ import annotations

from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

Family = Literal[
    "torus_grid",
    "hex_torus",
    "klein_grid",
    "rp2_minimal",
    "genus_g_polygon",
    "wedge",
    "disjoint_union",
    "sphere",
    "cycle",
    "cone",
]


class CochainDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    degree: Literal[0, 1, 2]
    support: List[int] = Field(default_factory=list)


class ComplexDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vertices: int = Field(ge=0)
    edges: List[Tuple[int, int]] = Field(default_factory=list)
    triangles: List[Tuple[int, int, int]] = Field(default_factory=list)
    lengths: Optional[List[Union[str, float]]] = None
    cochains: Dict[str, CochainDocument] = Field(default_factory=dict)


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Family
    m: Optional[int] = None
    n: Optional[int] = None
    lx: float = 1.0
    ly: float = 1.0
    side: float = 1.0
    genus: Optional[int] = None
    kind: Literal["tetrahedron", "octahedron"] = "octahedron"
    operands: List["GeneratorSpec"] = Field(default_factory=list)


class VerificationRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    inequality: Literal["main", "ball-growth", "cover"]
    complex: ComplexDocument
    level: int = Field(default=0, ge=0)
    radii: Optional[List[float]] = None
    cocycle: Optional[str] = None


class OptimizerSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    budget: Optional[int] = None
    scale: Optional[float] = None
    seed: Optional[int] = None
    level: int = Field(default=0, ge=0)
    epsilon: Optional[float] = None
    temperature: Optional[float] = None
    strict_floors: Optional[bool] = None


class OptimizationRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    complex: ComplexDocument
    config: OptimizerSettings = Field(default_factory=OptimizerSettings)
