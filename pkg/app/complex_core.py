"""Finite simplicial 2-complexes and piecewise-flat metrics on them.

A ``Complex2`` carries its global vertex order implicitly: vertices are the
integers ``0..vertex_count-1``, edges are stored as ``(u, v)`` with ``u < v``
and triangles as ``(u, v, w)`` with ``u < v < w``. The cup product and the
subdivision rules rely on that order, so it is fixed at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from app.errors import ComplexValidationError, DegenerateTriangleError, MetricError

Edge = Tuple[int, int]
Triangle = Tuple[int, int, int]

# Column order of Complex2.incidence: front face [v0,v1], back face [v1,v2], long face [v0,v2].
FRONT, BACK, LONG = 0, 1, 2


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    code: Optional[str] = None
    message: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)
    connected: Optional[bool] = None

    def raise_for_error(self) -> None:
        if not self.valid:
            raise ComplexValidationError(self.message or "invalid complex", code=self.code, details=self.details)


@dataclass(frozen=True)
class Complex2:
    vertex_count: int
    edges: Tuple[Edge, ...]
    triangles: Tuple[Triangle, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "triangles", tuple((int(a), int(b), int(c)) for a, b, c in self.triangles))

    @classmethod
    def from_simplices(
        cls,
        vertex_count: int,
        triangles: Iterable[Sequence[int]] = (),
        edges: Iterable[Sequence[int]] = (),
    ) -> "Complex2":
        """Close the given simplices under taking faces and sort everything lexicographically."""
        tri_set = {tuple(sorted(int(x) for x in t)) for t in triangles}
        edge_set = {tuple(sorted(int(x) for x in e)) for e in edges}
        for a, b, c in tri_set:
            edge_set.update(((a, b), (b, c), (a, c)))
        return cls(vertex_count, tuple(sorted(edge_set)), tuple(sorted(tri_set)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def simplex_count(self, degree: int) -> int:
        if degree == 0:
            return self.vertex_count
        if degree == 1:
            return self.edge_count
        if degree == 2:
            return self.triangle_count
        return 0

    @cached_property
    def edge_array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def triangle_array(self) -> np.ndarray:
        return np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @cached_property
    def edge_index(self) -> Dict[Edge, int]:
        return {edge: idx for idx, edge in enumerate(self.edges)}

    @cached_property
    def triangle_index(self) -> Dict[Triangle, int]:
        return {tri: idx for idx, tri in enumerate(self.triangles)}

    def edge_ids(self, pairs: np.ndarray) -> np.ndarray:
        """Indices of the given vertex pairs (each row sorted), -1 where absent."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if self.edge_count == 0:
            return np.full(len(pairs), -1, dtype=np.int64)
        base = max(self.vertex_count, 1)
        keys = self.edge_array[:, 0] * base + self.edge_array[:, 1]
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        query = pairs[:, 0] * base + pairs[:, 1]
        pos = np.clip(np.searchsorted(sorted_keys, query), 0, len(sorted_keys) - 1)
        found = sorted_keys[pos] == query
        return np.where(found, order[pos], -1)

    def triangle_ids(self, triples: np.ndarray) -> np.ndarray:
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if self.triangle_count == 0:
            return np.full(len(triples), -1, dtype=np.int64)
        base = max(self.vertex_count, 1)
        arr = self.triangle_array
        keys = (arr[:, 0] * base + arr[:, 1]) * base + arr[:, 2]
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        query = (triples[:, 0] * base + triples[:, 1]) * base + triples[:, 2]
        pos = np.clip(np.searchsorted(sorted_keys, query), 0, len(sorted_keys) - 1)
        found = sorted_keys[pos] == query
        return np.where(found, order[pos], -1)

    @cached_property
    def incidence(self) -> np.ndarray:
        """Per triangle the edge indices of its front, back and long faces (-1 when missing)."""
        tri = self.triangle_array
        if len(tri) == 0:
            return np.zeros((0, 3), dtype=np.int64)
        front = self.edge_ids(tri[:, [0, 1]])
        back = self.edge_ids(tri[:, [1, 2]])
        long = self.edge_ids(tri[:, [0, 2]])
        return np.stack([front, back, long], axis=1)

    @cached_property
    def edge_triangle_counts(self) -> np.ndarray:
        inc = self.incidence
        return np.bincount(inc[inc >= 0].ravel(), minlength=self.edge_count)

    def skeleton_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.vertex_count))
        graph.add_edges_from(self.edges)
        return graph

    def component_count(self) -> int:
        if self.vertex_count == 0:
            return 0
        return nx.number_connected_components(self.skeleton_graph())


def validate(complex_: Complex2, *, check_connectivity: bool = True) -> ValidationResult:
    """Check every Complex2 invariant, reporting the first violation found."""
    n = complex_.vertex_count
    if n < 0:
        return ValidationResult(False, "INDEX_OUT_OF_RANGE", "negative vertex count", {"vertices": n})
    seen_edges: set[Edge] = set()
    for idx, (u, v) in enumerate(complex_.edges):
        if not (0 <= u < n and 0 <= v < n):
            return ValidationResult(
                False, "INDEX_OUT_OF_RANGE", "edge endpoint out of range", {"edge": idx, "simplex": [u, v]}
            )
        if u == v:
            return ValidationResult(
                False, "DEGENERATE_SIMPLEX", "edge endpoints coincide", {"edge": idx, "simplex": [u, v]}
            )
        if u > v:
            return ValidationResult(
                False, "UNORDERED_SIMPLEX", "edge not in global vertex order", {"edge": idx, "simplex": [u, v]}
            )
        if (u, v) in seen_edges:
            return ValidationResult(False, "DUPLICATE_SIMPLEX", "duplicate simplex", {"edge": idx, "simplex": [u, v]})
        seen_edges.add((u, v))
    seen_triangles: set[Triangle] = set()
    for idx, (a, b, c) in enumerate(complex_.triangles):
        simplex = [a, b, c]
        if not all(0 <= x < n for x in simplex):
            return ValidationResult(
                False, "INDEX_OUT_OF_RANGE", "triangle vertex out of range", {"triangle": idx, "simplex": simplex}
            )
        if len({a, b, c}) < 3:
            return ValidationResult(
                False, "DEGENERATE_SIMPLEX", "triangle vertices coincide", {"triangle": idx, "simplex": simplex}
            )
        if not (a < b < c):
            return ValidationResult(
                False,
                "UNORDERED_SIMPLEX",
                "triangle not in global vertex order",
                {"triangle": idx, "simplex": simplex},
            )
        if (a, b, c) in seen_triangles:
            return ValidationResult(
                False, "DUPLICATE_SIMPLEX", "duplicate simplex", {"triangle": idx, "simplex": simplex}
            )
        seen_triangles.add((a, b, c))
        for face in ((a, b), (b, c), (a, c)):
            if face not in seen_edges:
                return ValidationResult(
                    False,
                    "MISSING_FACE",
                    "missing face",
                    {"triangle": idx, "simplex": simplex, "face": list(face)},
                )
    connected = None
    if check_connectivity and n > 0:
        connected = complex_.component_count() == 1
    return ValidationResult(True, connected=connected)


def require_valid(complex_: Complex2) -> Complex2:
    validate(complex_, check_connectivity=False).raise_for_error()
    return complex_


def euler_characteristic(complex_: Complex2) -> int:
    return complex_.vertex_count - complex_.edge_count + complex_.triangle_count


def _heron(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Kahan's ordering keeps Heron's formula accurate for needle-like triangles.
    sides = np.sort(np.stack([a, b, c], axis=-1), axis=-1)[..., ::-1]
    x, y, z = sides[..., 0], sides[..., 1], sides[..., 2]
    prod = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def _strict_triangle(a: float, b: float, c: float) -> bool:
    return a > 0 and b > 0 and c > 0 and a < b + c and b < a + c and c < a + b


def triangle_area(a: float, b: float, c: float) -> float:
    """Heron area of a flat triangle with side lengths a, b, c."""
    if not _strict_triangle(a, b, c):
        raise DegenerateTriangleError("degenerate triangle", details={"lengths": [a, b, c]})
    return float(_heron(np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float)))


@dataclass(frozen=True)
class PLMetric:
    lengths: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.lengths, dtype=float)
        arr.setflags(write=False)
        return arr

    def scaled(self, factor: float) -> "PLMetric":
        return PLMetric(tuple(x * factor for x in self.lengths))


def check_metric(complex_: Complex2, metric: PLMetric) -> None:
    if len(metric.lengths) != complex_.edge_count:
        raise MetricError(
            "length count does not match edge count",
            code="LENGTH_COUNT_MISMATCH",
            details={"edges": complex_.edge_count, "lengths": len(metric.lengths)},
        )
    arr = metric.array
    bad = np.flatnonzero(~(arr > 0) | ~np.isfinite(arr))
    if bad.size:
        idx = int(bad[0])
        raise MetricError(
            "edge length must be positive",
            code="NON_POSITIVE_LENGTH",
            details={"edge": idx, "simplex": list(complex_.edges[idx]), "length": float(arr[idx])},
        )
    if complex_.triangle_count == 0:
        return
    sides = arr[complex_.incidence]
    a, b, c = sides[:, 0], sides[:, 1], sides[:, 2]
    ok = (a < b + c) & (b < a + c) & (c < a + b)
    bad = np.flatnonzero(~ok)
    if bad.size:
        idx = int(bad[0])
        raise MetricError(
            "triangle inequality violated",
            code="TRIANGLE_INEQUALITY",
            details={"triangle": idx, "simplex": list(complex_.triangles[idx]), "lengths": sides[idx].tolist()},
        )


@dataclass(frozen=True)
class MetricComplex:
    complex: Complex2
    metric: PLMetric
    areas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        check_metric(self.complex, self.metric)
        areas = triangle_areas(self.complex, self.metric.array)
        areas.setflags(write=False)
        object.__setattr__(self, "areas", areas)

    @classmethod
    def build(cls, complex_: Complex2, lengths: Iterable[float]) -> "MetricComplex":
        require_valid(complex_)
        return cls(complex_, PLMetric(tuple(lengths)))

    @property
    def lengths(self) -> np.ndarray:
        return self.metric.array

    def scaled(self, factor: float) -> "MetricComplex":
        return MetricComplex(self.complex, self.metric.scaled(factor))

    def with_lengths(self, lengths: Iterable[float]) -> "MetricComplex":
        return MetricComplex(self.complex, PLMetric(tuple(lengths)))


def triangle_areas(complex_: Complex2, lengths: np.ndarray) -> np.ndarray:
    """Heron areas for every triangle, no metric checks."""
    if complex_.triangle_count == 0:
        return np.zeros(0, dtype=float)
    sides = np.asarray(lengths, dtype=float)[complex_.incidence]
    return _heron(sides[:, 0], sides[:, 1], sides[:, 2])


def total_area(mc: MetricComplex) -> float:
    return math.fsum(mc.areas.tolist())


def triangle_slack(complex_: Complex2, lengths: np.ndarray) -> np.ndarray:
    """Per triangle: smallest triangle-inequality slack divided by the perimeter."""
    if complex_.triangle_count == 0:
        return np.zeros(0, dtype=float)
    sides = np.asarray(lengths, dtype=float)[complex_.incidence]
    perimeter = sides.sum(axis=1)
    slack = perimeter[:, None] - 2.0 * sides
    return slack.min(axis=1) / perimeter


def relabel(complex_: Complex2, mapping: Sequence[int], vertex_count: Optional[int] = None) -> Tuple[Complex2, np.ndarray]:
    """Apply a vertex renaming; returns the re-sorted complex and, per new edge, its old edge index."""
    mapping = np.asarray(mapping, dtype=np.int64)
    count = int(vertex_count if vertex_count is not None else (mapping.max() + 1 if len(mapping) else 0))
    edges = np.sort(mapping[complex_.edge_array], axis=1) if complex_.edge_count else np.zeros((0, 2), np.int64)
    tris = np.sort(mapping[complex_.triangle_array], axis=1) if complex_.triangle_count else np.zeros((0, 3), np.int64)
    new = Complex2(count, tuple(sorted(map(tuple, edges.tolist()))), tuple(sorted(map(tuple, tris.tolist()))))
    old_for_new = np.empty(new.edge_count, dtype=np.int64)
    if new.edge_count:
        old_for_new[new.edge_ids(edges)] = np.arange(complex_.edge_count)
    return new, old_for_new


def merge(parts: List[Tuple[MetricComplex, np.ndarray]], vertex_count: int) -> MetricComplex:
    """Union of metric complexes after mapping each into a common vertex set."""
    edge_lengths: Dict[Edge, float] = {}
    triangles: set[Triangle] = set()
    for mc, mapping in parts:
        mapping = np.asarray(mapping, dtype=np.int64)
        for (u, v), length in zip(mc.complex.edges, mc.lengths.tolist()):
            key = tuple(sorted((int(mapping[u]), int(mapping[v]))))
            if key in edge_lengths and not math.isclose(edge_lengths[key], length, rel_tol=1e-12):
                raise ComplexValidationError(
                    "conflicting lengths for an identified edge",
                    code="DUPLICATE_SIMPLEX",
                    details={"simplex": list(key)},
                )
            edge_lengths[key] = length
        for tri in mc.complex.triangles:
            triangles.add(tuple(sorted(int(mapping[x]) for x in tri)))
    edges = tuple(sorted(edge_lengths))
    complex_ = Complex2(vertex_count, edges, tuple(sorted(triangles)))
    return MetricComplex.build(complex_, [edge_lengths[e] for e in edges])
