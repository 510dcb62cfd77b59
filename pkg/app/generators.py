"""Standard complexes with flat metrics: tori, Klein bottles, RP², genus-g polygons and combinators."""
from __future__ import annotations

import itertools
import math
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from app.complex_core import Complex2, MetricComplex, merge
from app.errors import GeneratorError
from app.models.documents import GeneratorSpec

RP2_TRIANGLES: Tuple[Tuple[int, int, int], ...] = (
    (0, 1, 2),
    (0, 2, 3),
    (0, 3, 4),
    (0, 4, 5),
    (0, 5, 1),
    (1, 2, 4),
    (2, 3, 5),
    (3, 4, 1),
    (4, 5, 2),
    (5, 1, 3),
)


def _require(condition: bool, parameter: str, valid_range: str, value: object) -> None:
    if not condition:
        raise GeneratorError(
            f"{parameter} out of range: expected {valid_range}",
            details={"parameter": parameter, "range": valid_range, "value": value},
        )


def _positive(value: float, parameter: str) -> float:
    _require(value is not None and math.isfinite(value) and value > 0, parameter, "> 0", value)
    return float(value)


def _from_lengths(vertex_count: int, triangles: Iterable[Sequence[int]], lengths: Dict[Tuple[int, int], float]) -> MetricComplex:
    complex_ = Complex2.from_simplices(vertex_count, triangles, lengths.keys())
    return MetricComplex.build(complex_, [lengths[e] for e in complex_.edges])


def _unit(vertex_count: int, triangles: Iterable[Sequence[int]], side: float = 1.0) -> MetricComplex:
    complex_ = Complex2.from_simplices(vertex_count, triangles)
    return MetricComplex.build(complex_, [side] * complex_.edge_count)


def _grid(
    m: int,
    n: int,
    u: Tuple[float, float],
    v: Tuple[float, float],
    vid: Callable[[int, int], int],
) -> MetricComplex:
    """Quadrilateral grid cut along the shorter diagonal of its parallelogram cells."""
    _require(m >= 3, "m", ">= 3", m)
    _require(n >= 3, "n", ">= 3", n)
    u_vec, v_vec = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    main = float(np.hypot(*(u_vec + v_vec)))
    anti = float(np.hypot(*(v_vec - u_vec)))
    du, dv = float(np.hypot(*u_vec)), float(np.hypot(*v_vec))
    lengths: Dict[Tuple[int, int], float] = {}
    triangles: List[Tuple[int, int, int]] = []

    def put(p: int, q: int, length: float) -> None:
        key = (min(p, q), max(p, q))
        if key in lengths and not math.isclose(lengths[key], length, rel_tol=1e-12):
            raise GeneratorError("grid identification is not an isometry", details={"edge": list(key)})
        lengths[key] = length

    for i in range(m):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            put(a, b, du)
            put(d, c, du)
            put(a, d, dv)
            put(b, c, dv)
            if main <= anti:
                put(a, c, main)
                triangles.extend([(a, b, c), (a, c, d)])
            else:
                put(b, d, anti)
                triangles.extend([(a, b, d), (b, c, d)])
    return _from_lengths(m * n, triangles, lengths)


def torus_grid(m: int, n: int, lx: float = 1.0, ly: float = 1.0) -> MetricComplex:
    lx, ly = _positive(lx, "lx"), _positive(ly, "ly")
    return _grid(m, n, (lx / m, 0.0), (0.0, ly / n), lambda i, j: (i % m) * n + (j % n))


def hex_torus(m: int = 3, n: int = 3, side: float = 1.0) -> MetricComplex:
    """Quotient of the 60-degree lattice; for m == n every triangle is equilateral."""
    side = _positive(side, "side")
    return _grid(m, n, (side, 0.0), (0.5 * side, 0.5 * math.sqrt(3.0) * side), lambda i, j: (i % m) * n + (j % n))


def klein_grid(m: int, n: int, lx: float = 1.0, ly: float = 1.0) -> MetricComplex:
    """Grid whose x-seam is glued with a reflection: (m, j) ~ (0, -j)."""
    lx, ly = _positive(lx, "lx"), _positive(ly, "ly")

    def vid(i: int, j: int) -> int:
        if i == m:
            i, j = 0, -j
        return (i % m) * n + (j % n)

    return _grid(m, n, (lx / m, 0.0), (0.0, ly / n), vid)


def rp2_minimal(side: float = 1.0) -> MetricComplex:
    return _unit(6, RP2_TRIANGLES, _positive(side, "side"))


def genus_g_polygon(genus: int, side: float = 1.0) -> MetricComplex:
    """Triangulated 4g-gon with word a1 b1 a1^-1 b1^-1 ...; f-vector (16g+2, 54g, 36g)."""
    _require(isinstance(genus, int) and genus >= 1, "genus", ">= 1", genus)
    side = _positive(side, "side")
    g = genus
    positions = 12 * g
    center = 16 * g + 1

    def boundary(k: int) -> int:
        s, o = divmod(k % positions, 3)
        if o == 0:
            return 0
        group, w = divmod(s, 4)
        letter = 2 * group + (w % 2)
        if w >= 2:
            o = 3 - o
        return 1 + 2 * letter + (o - 1)

    def ring(k: int) -> int:
        return 1 + 4 * g + (k % positions)

    triangles: List[Tuple[int, int, int]] = []
    for k in range(positions):
        triangles.append((boundary(k), boundary(k + 1), ring(k)))
        triangles.append((boundary(k + 1), ring(k + 1), ring(k)))
        triangles.append((center, ring(k), ring(k + 1)))
    return _unit(16 * g + 2, triangles, side)


def sphere(kind: str = "octahedron", side: float = 1.0) -> MetricComplex:
    side = _positive(side, "side")
    if kind == "tetrahedron":
        return _unit(4, itertools.combinations(range(4), 3), side)
    _require(kind == "octahedron", "kind", "tetrahedron | octahedron", kind)
    equator = [1, 2, 3, 4]
    triangles = []
    for a, b in zip(equator, equator[1:] + equator[:1]):
        triangles.extend([(0, a, b), (5, a, b)])
    return _unit(6, triangles, side)


def cycle(n: int, length: float = 1.0) -> MetricComplex:
    _require(n >= 3, "n", ">= 3", n)
    length = _positive(length, "length")
    complex_ = Complex2.from_simplices(n, edges=[(i, (i + 1) % n) for i in range(n)])
    return MetricComplex.build(complex_, [length] * complex_.edge_count)


def cone(base: MetricComplex) -> MetricComplex:
    """Cone over a graph; apex edges take the longest base edge length."""
    _require(base.complex.triangle_count == 0, "operand", "a graph (no triangles)", base.complex.triangle_count)
    n = base.complex.vertex_count
    apex_len = float(base.lengths.max()) if base.complex.edge_count else 1.0
    lengths = {edge: float(x) for edge, x in zip(base.complex.edges, base.lengths.tolist())}
    for v in range(n):
        lengths[(v, n)] = apex_len
    triangles = [(u, v, n) for u, v in base.complex.edges]
    return _from_lengths(n + 1, triangles, lengths)


def wedge(a: MetricComplex, b: MetricComplex) -> MetricComplex:
    """Identify vertex 0 of both operands."""
    na, nb = a.complex.vertex_count, b.complex.vertex_count
    _require(na >= 1 and nb >= 1, "operands", "non-empty complexes", [na, nb])
    mapping_b = np.concatenate([[0], na + np.arange(nb - 1)]).astype(np.int64)
    return merge([(a, np.arange(na)), (b, mapping_b)], na + nb - 1)


def disjoint_union(a: MetricComplex, b: MetricComplex) -> MetricComplex:
    na, nb = a.complex.vertex_count, b.complex.vertex_count
    return merge([(a, np.arange(na)), (b, na + np.arange(nb))], na + nb)


def generate(spec: GeneratorSpec) -> MetricComplex:
    family = spec.family
    if family == "torus_grid":
        return torus_grid(_need(spec.m, "m"), _need(spec.n, "n"), spec.lx, spec.ly)
    if family == "hex_torus":
        return hex_torus(spec.m or 3, spec.n or spec.m or 3, spec.side)
    if family == "klein_grid":
        return klein_grid(_need(spec.m, "m"), _need(spec.n, "n"), spec.lx, spec.ly)
    if family == "rp2_minimal":
        return rp2_minimal(spec.side)
    if family == "genus_g_polygon":
        return genus_g_polygon(_need(spec.genus, "genus"), spec.side)
    if family == "sphere":
        return sphere(spec.kind, spec.side)
    if family == "cycle":
        return cycle(_need(spec.n, "n"), spec.side)
    operands = [generate(op) for op in spec.operands]
    if family == "cone":
        _require(len(operands) == 1, "operands", "exactly 1", len(operands))
        return cone(operands[0])
    _require(len(operands) == 2, "operands", "exactly 2", len(operands))
    if family == "wedge":
        return wedge(*operands)
    return disjoint_union(*operands)


def _need(value: int | None, parameter: str) -> int:
    _require(value is not None, parameter, "required", value)
    return int(value)  # type: ignore[arg-type]
