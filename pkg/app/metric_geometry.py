"""Metric computations on piecewise-flat complexes.

Lengths of cohomology classes are shortest sheet-swapping loops in the double
cover defined by a cocycle. Edge paths overestimate rectifiable lengths, so
every estimate carries the midpoint-subdivision level it was computed at.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra

from app.complex_core import BACK, FRONT, LONG, Complex2, MetricComplex, PLMetric
from app.config import settings
from app.errors import NoNontrivialClassError, SystolicError, TrivialClassError
from app.z2_algebra import (
    CohomologyBasis,
    Z2Vector,
    cohomology_basis,
    is_coboundary,
    reduce_support,
    require_cocycle,
)

logger = logging.getLogger("systolic.geometry")

EDGE_EXACT = "edge-exact"
UPPER_BOUND = "upper-bound"


def _skeleton_graph(complex_: Complex2, lengths: np.ndarray) -> csr_matrix:
    n = complex_.vertex_count
    ea = complex_.edge_array
    rows = np.concatenate([ea[:, 0], ea[:, 1]])
    cols = np.concatenate([ea[:, 1], ea[:, 0]])
    data = np.concatenate([lengths, lengths])
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def shortest_distances(mc: MetricComplex, source: int) -> np.ndarray:
    """Single-source distances on the weighted 1-skeleton; unreachable vertices are inf."""
    n = mc.complex.vertex_count
    if not 0 <= source < n:
        raise SystolicError("source vertex out of range", code="INDEX_OUT_OF_RANGE", details={"vertex": source})
    return dijkstra(_skeleton_graph(mc.complex, mc.lengths), directed=False, indices=source)


# --------------------------------------------------------------------------- double cover


@dataclass(frozen=True)
class DoubleCover:
    base: MetricComplex
    alpha: Z2Vector
    cover: MetricComplex
    vertex_projection: np.ndarray
    edge_projection: np.ndarray
    triangle_projection: np.ndarray
    involution: np.ndarray
    edge_involution: np.ndarray
    triangle_involution: np.ndarray

    @property
    def connected(self) -> bool:
        return self.cover.complex.component_count() == 1


def _sorted_rows(arr: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.sort(arr, axis=1)
    order = np.lexsort(arr.T[::-1])
    return arr[order], order


def build_double_cover(mc: MetricComplex, alpha: Z2Vector) -> DoubleCover:
    """Two-sheeted cover in which an edge swaps sheets exactly when α is 1 on it."""
    complex_ = mc.complex
    require_cocycle(complex_, alpha)
    n = complex_.vertex_count
    a = alpha.bits.astype(np.int64)
    ea = complex_.edge_array
    sheets = np.array([0, 1], dtype=np.int64)

    lifted_edges = np.concatenate(
        [np.stack([ea[:, 0] + s * n, ea[:, 1] + (s ^ a) * n], axis=1) for s in sheets]
    ).reshape(-1, 2)
    edge_base = np.tile(np.arange(complex_.edge_count), 2)
    edges, edge_order = _sorted_rows(lifted_edges)

    ta = complex_.triangle_array
    inc = complex_.incidence
    if complex_.triangle_count:
        a01, a02 = a[inc[:, FRONT]], a[inc[:, LONG]]
        lifted_tris = np.concatenate(
            [np.stack([ta[:, 0] + s * n, ta[:, 1] + (s ^ a01) * n, ta[:, 2] + (s ^ a02) * n], axis=1) for s in sheets]
        )
    else:
        lifted_tris = np.zeros((0, 3), dtype=np.int64)
    tri_base = np.tile(np.arange(complex_.triangle_count), 2)
    tris, tri_order = _sorted_rows(lifted_tris)

    cover = Complex2(2 * n, tuple(map(tuple, edges.tolist())), tuple(map(tuple, tris.tolist())))
    vertex_projection = np.arange(2 * n) % max(n, 1)
    involution = (np.arange(2 * n) + n) % max(2 * n, 1)
    edge_projection = edge_base[edge_order]
    triangle_projection = tri_base[tri_order]
    edge_involution = cover.edge_ids(np.sort(involution[cover.edge_array], axis=1))
    triangle_involution = cover.triangle_ids(np.sort(involution[cover.triangle_array], axis=1))
    cover_mc = MetricComplex(cover, PLMetric(tuple(mc.lengths[edge_projection].tolist())))
    logger.debug(
        "double_cover_built vertices=%s edges=%s triangles=%s",
        cover.vertex_count,
        cover.edge_count,
        cover.triangle_count,
    )
    return DoubleCover(
        base=mc,
        alpha=alpha,
        cover=cover_mc,
        vertex_projection=vertex_projection,
        edge_projection=edge_projection,
        triangle_projection=triangle_projection,
        involution=involution,
        edge_involution=edge_involution,
        triangle_involution=triangle_involution,
    )


# --------------------------------------------------------------------------- subdivision


@dataclass(frozen=True)
class _Step:
    complex: Complex2
    vertex_carrier: np.ndarray
    edge_carrier: np.ndarray
    triangle_carrier: np.ndarray
    length_parent: np.ndarray
    transport: np.ndarray


def _carrier(dim: int, idx: np.ndarray) -> np.ndarray:
    return np.stack([np.full(len(idx), dim, dtype=np.int64), idx.astype(np.int64)], axis=1)


def _subdivide_step(complex_: Complex2) -> _Step:
    """4-to-1 midpoint subdivision; the midpoint of edge e becomes vertex V + e."""
    n, ne, nf = complex_.vertex_count, complex_.edge_count, complex_.triangle_count
    ea = complex_.edge_array
    inc = complex_.incidence
    ta = complex_.triangle_array
    e_ids = np.arange(ne, dtype=np.int64)
    t_ids = np.arange(nf, dtype=np.int64)
    none_e = np.full(ne, -1, dtype=np.int64)
    none_t = np.full(nf, -1, dtype=np.int64)
    mid = n + inc
    m01, m12, m02 = mid[:, FRONT], mid[:, BACK], mid[:, LONG]

    edges = np.concatenate(
        [
            np.stack([ea[:, 0], n + e_ids], axis=1),
            np.stack([ea[:, 1], n + e_ids], axis=1),
            np.sort(np.stack([m01, m02], axis=1), axis=1),
            np.sort(np.stack([m01, m12], axis=1), axis=1),
            np.sort(np.stack([m12, m02], axis=1), axis=1),
        ]
    ).reshape(-1, 2)
    # Each midsegment is half of the side it does not touch.
    length_parent = np.concatenate([e_ids, e_ids, inc[:, BACK], inc[:, LONG], inc[:, FRONT]])
    # Cocycle values: lower half-edge keeps α(e); m01m02 = α01 + α02, m01m12 = α12, m12m02 = 0.
    transport = np.concatenate(
        [
            np.stack([e_ids, none_e], axis=1),
            np.stack([none_e, none_e], axis=1),
            np.stack([inc[:, FRONT], inc[:, LONG]], axis=1),
            np.stack([inc[:, BACK], none_t], axis=1),
            np.stack([none_t, none_t], axis=1),
        ]
    ).reshape(-1, 2)
    edge_carrier = np.concatenate([_carrier(1, e_ids), _carrier(1, e_ids)] + [_carrier(2, t_ids)] * 3).reshape(-1, 2)
    edges, order = _sorted_rows(edges)

    tris = np.concatenate(
        [
            np.stack([ta[:, 0], m01, m02], axis=1),
            np.stack([ta[:, 1], m01, m12], axis=1),
            np.stack([ta[:, 2], m12, m02], axis=1),
            np.stack([m01, m12, m02], axis=1),
        ]
    ).reshape(-1, 3)
    tris, tri_order = _sorted_rows(tris)
    triangle_carrier = np.concatenate([_carrier(2, t_ids)] * 4).reshape(-1, 2)[tri_order]

    vertex_carrier = np.concatenate([_carrier(0, np.arange(n)), _carrier(1, e_ids)]).reshape(-1, 2)
    refined = Complex2(n + ne, tuple(map(tuple, edges.tolist())), tuple(map(tuple, tris.tolist())))
    return _Step(
        complex=refined,
        vertex_carrier=vertex_carrier,
        edge_carrier=edge_carrier[order],
        triangle_carrier=triangle_carrier,
        length_parent=length_parent[order],
        transport=transport[order],
    )


def _apply_transport(transport: np.ndarray, bits: np.ndarray) -> np.ndarray:
    ext = np.append(np.asarray(bits, dtype=bool), False)
    return ext[transport[:, 0]] ^ ext[transport[:, 1]]


@dataclass(frozen=True)
class SubdividedComplex:
    """A refined metric complex with carrier maps back to the level-0 complex."""

    mc: MetricComplex
    level: int
    vertex_carrier: np.ndarray
    edge_carrier: np.ndarray
    triangle_carrier: np.ndarray
    length_source: np.ndarray


class RefinementLadder:
    """Cached combinatorics of iterated subdivisions of one complex.

    Every refined edge has length 2^-k times the length of one base edge
    (``length_source``), so new base lengths can be pushed through the ladder
    without rebuilding it.
    """

    def __init__(self, base: MetricComplex) -> None:
        self.base = base
        n, ne, nf = base.complex.vertex_count, base.complex.edge_count, base.complex.triangle_count
        self._complexes: List[Complex2] = [base.complex]
        self._vertex_carrier = [_carrier(0, np.arange(n))]
        self._edge_carrier = [_carrier(1, np.arange(ne))]
        self._triangle_carrier = [_carrier(2, np.arange(nf))]
        self._length_source = [np.arange(ne, dtype=np.int64)]
        self._transports: List[np.ndarray] = []

    def _extend(self, level: int) -> None:
        while len(self._complexes) <= level:
            prev = len(self._complexes) - 1
            step = _subdivide_step(self._complexes[prev])
            self._complexes.append(step.complex)
            self._transports.append(step.transport)
            self._length_source.append(self._length_source[prev][step.length_parent])
            self._vertex_carrier.append(self._compose(prev, step.vertex_carrier))
            self._edge_carrier.append(self._compose(prev, step.edge_carrier))
            self._triangle_carrier.append(self._compose(prev, step.triangle_carrier))
            logger.debug(
                "subdivision_level_built level=%s vertices=%s edges=%s triangles=%s",
                prev + 1,
                step.complex.vertex_count,
                step.complex.edge_count,
                step.complex.triangle_count,
            )

    def _compose(self, prev: int, carrier: np.ndarray) -> np.ndarray:
        out = np.empty_like(carrier)
        tables = {0: self._vertex_carrier[prev], 1: self._edge_carrier[prev], 2: self._triangle_carrier[prev]}
        for dim, table in tables.items():
            mask = carrier[:, 0] == dim
            out[mask] = table[carrier[mask, 1]]
        return out

    def complex_at(self, level: int) -> Complex2:
        self._extend(level)
        return self._complexes[level]

    def lengths_at(self, level: int, base_lengths: Optional[np.ndarray] = None) -> np.ndarray:
        self._extend(level)
        base = self.base.lengths if base_lengths is None else np.asarray(base_lengths, dtype=float)
        return base[self._length_source[level]] * (0.5**level)

    def transport(self, cochain: Z2Vector, level: int) -> Z2Vector:
        """Carry a 1-cocycle on the base complex to a cohomologous cocycle on a refinement."""
        if cochain.degree != 1:
            raise SystolicError("only 1-cochains are transported", code="DEGREE_MISMATCH")
        self._extend(level)
        bits = cochain.bits
        for k in range(level):
            bits = _apply_transport(self._transports[k], bits)
        return Z2Vector(1, bits)

    def level(self, level: int, base_lengths: Optional[np.ndarray] = None) -> SubdividedComplex:
        self._extend(level)
        mc = MetricComplex(self._complexes[level], PLMetric(tuple(self.lengths_at(level, base_lengths).tolist())))
        return SubdividedComplex(
            mc=mc,
            level=level,
            vertex_carrier=self._vertex_carrier[level],
            edge_carrier=self._edge_carrier[level],
            triangle_carrier=self._triangle_carrier[level],
            length_source=self._length_source[level],
        )


def refine(mc: MetricComplex, levels: int = 0) -> RefinementLadder:
    ladder = RefinementLadder(mc)
    ladder.complex_at(levels)
    return ladder


def subdivide(mc: MetricComplex) -> SubdividedComplex:
    return RefinementLadder(mc).level(1)


def subdivide_to_level(mc: MetricComplex, level: int) -> SubdividedComplex:
    return RefinementLadder(mc).level(level)


def transport_cocycle(mc: MetricComplex, cochain: Z2Vector, level: int) -> Z2Vector:
    return RefinementLadder(mc).transport(cochain, level)


# --------------------------------------------------------------------------- class lengths


@dataclass(frozen=True)
class LengthEstimate:
    value: float
    kind: str
    level: int
    cycle: Tuple[int, ...] = ()
    source: Optional[int] = None
    class_index: Optional[int] = None


def _cover_graph(complex_: Complex2, lengths: np.ndarray, bits: np.ndarray) -> csr_matrix:
    n = complex_.vertex_count
    ea = complex_.edge_array
    a = bits.astype(np.int64)
    u0, v0 = ea[:, 0], ea[:, 1] + a * n
    u1, v1 = ea[:, 0] + n, ea[:, 1] + (1 - a) * n
    rows = np.concatenate([u0, v0, u1, v1])
    cols = np.concatenate([v0, u0, v1, u1])
    data = np.tile(lengths, 4)
    return coo_matrix((data, (rows, cols)), shape=(2 * n, 2 * n)).tocsr()


def sheet_swap_length(
    complex_: Complex2,
    lengths: np.ndarray,
    bits: np.ndarray,
) -> Tuple[float, Tuple[int, ...], int]:
    """Shortest loop pairing oddly with the cocycle: min over v of dist(v⁰, v¹) in the cover."""
    n = complex_.vertex_count
    support = np.flatnonzero(bits)
    if support.size == 0:
        raise TrivialClassError("class is trivial, length undefined (infimum over empty set)")
    # Every such loop crosses a support edge, so it passes through that edge's lower endpoint.
    sources = np.unique(complex_.edge_array[support, 0])
    graph = _cover_graph(complex_, lengths, bits)
    dist, pred = dijkstra(graph, directed=False, indices=sources, return_predecessors=True)
    dist = np.atleast_2d(dist)
    pred = np.atleast_2d(pred)
    swap = dist[np.arange(len(sources)), sources + n]
    best = int(np.argmin(swap))
    value = float(swap[best])
    if not math.isfinite(value):
        raise TrivialClassError("class is trivial, length undefined (infimum over empty set)")
    source = int(sources[best])
    hops: List[Tuple[int, int]] = []
    node = source + n
    while node != source:
        prev = int(pred[best, node])
        hops.append((prev % n, node % n))
        node = prev
    pairs = np.sort(np.asarray(hops, dtype=np.int64).reshape(-1, 2), axis=1)
    ids = complex_.edge_ids(pairs)
    odd = np.flatnonzero(np.bincount(ids, minlength=complex_.edge_count) % 2 == 1)
    return value, tuple(int(i) for i in odd), source


def _check_nontrivial(complex_: Complex2, alpha: Z2Vector) -> None:
    require_cocycle(complex_, alpha)
    if is_coboundary(complex_, alpha):
        raise TrivialClassError(
            "class is trivial, length undefined (infimum over empty set)", details={"support": alpha.support}
        )


def length_of_class(
    mc: MetricComplex,
    alpha: Z2Vector,
    *,
    level: int = 0,
    ladder: Optional[RefinementLadder] = None,
    checked: bool = False,
    steiner_points: int = 0,
) -> LengthEstimate:
    """Shortest edge cycle γ with α(γ) = 1 after ``level`` midpoint subdivisions.

    With ``steiner_points`` > 0 the loop may also cut straight across triangles
    through that many points per edge; no edge cycle is reported then.
    """
    if not checked:
        _check_nontrivial(mc.complex, alpha)
    alpha = reduce_support(mc.complex, alpha)
    if level == 0:
        complex_, lengths, bits = mc.complex, mc.lengths, alpha.bits
    else:
        ladder = ladder or RefinementLadder(mc)
        complex_ = ladder.complex_at(level)
        lengths = ladder.lengths_at(level, mc.lengths)
        bits = ladder.transport(alpha, level).bits
    if steiner_points > 0:
        value = steiner_swap_length(complex_, lengths, bits, steiner_points)
        logger.debug("length_of_class_estimated level=%s value=%s steiner_points=%s", level, value, steiner_points)
        return LengthEstimate(value, UPPER_BOUND, level)
    value, cycle, source = sheet_swap_length(complex_, lengths, bits)
    logger.debug(
        "length_of_class_estimated level=%s value=%s sources=%s", level, value, int(np.count_nonzero(bits))
    )
    return LengthEstimate(value, EDGE_EXACT if level == 0 else UPPER_BOUND, level, cycle, source)


@dataclass(frozen=True)
class LengthSeries:
    estimates: Tuple[LengthEstimate, ...]
    stable: bool

    @property
    def final(self) -> LengthEstimate:
        return self.estimates[-1]

    @property
    def values(self) -> List[float]:
        return [e.value for e in self.estimates]


def _stable(values: Sequence[float], tolerance: float) -> bool:
    if len(values) < 2:
        return False
    prev, last = values[-2], values[-1]
    return abs(prev - last) <= tolerance * max(abs(prev), abs(last))


def length_series(
    mc: MetricComplex,
    alpha: Z2Vector,
    level: int,
    *,
    ladder: Optional[RefinementLadder] = None,
    tolerance: Optional[float] = None,
) -> LengthSeries:
    """Estimates at every level 0..level; values are non-increasing."""
    _check_nontrivial(mc.complex, alpha)
    ladder = ladder or RefinementLadder(mc)
    tol = settings.stability_tolerance if tolerance is None else tolerance
    out: List[LengthEstimate] = []
    for k in range(level + 1):
        est = length_of_class(mc, alpha, level=k, ladder=ladder, checked=True)
        if out and est.value > out[-1].value:
            # Level k paths include every level k-1 path; only rounding can push the value up.
            est = LengthEstimate(out[-1].value, est.kind, k, est.cycle, est.source)
        out.append(est)
    return LengthSeries(tuple(out), _stable([e.value for e in out], tol))


def z2_systole(
    mc: MetricComplex,
    basis: Optional[CohomologyBasis] = None,
    *,
    level: int = 0,
    ladder: Optional[RefinementLadder] = None,
    steiner_points: int = 0,
) -> LengthEstimate:
    """Min over an H^1 basis of the class lengths: the shortest Z2-non-trivial edge cycle."""
    basis = basis or cohomology_basis(mc.complex, 1)
    if basis.rank == 0:
        raise NoNontrivialClassError("no non-trivial Z2 classes")
    if level > 0:
        ladder = ladder or RefinementLadder(mc)
    best: Optional[LengthEstimate] = None
    for idx, alpha in enumerate(basis.representatives):
        est = length_of_class(
            mc, alpha, level=level, ladder=ladder, checked=True, steiner_points=steiner_points
        )
        if best is None or est.value < best.value:
            best = LengthEstimate(est.value, est.kind, est.level, est.cycle, est.source, idx)
    assert best is not None
    return best


# --------------------------------------------------------------------------- balls


@dataclass(frozen=True)
class BallBracket:
    radius: float
    lower: float
    upper: float


def _local_pairs(k: int) -> np.ndarray:
    """Pairs of boundary points of one triangle that share no side."""
    pairs: List[Tuple[int, int]] = []
    opposite = {0: BACK, 1: LONG, 2: FRONT}
    for w, side in opposite.items():
        pairs.extend((w, 3 + side * k + j) for j in range(k))
    for s1 in range(3):
        for s2 in range(s1 + 1, 3):
            pairs.extend((3 + s1 * k + j1, 3 + s2 * k + j2) for j1 in range(k) for j2 in range(k))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def _triangle_points(complex_: Complex2, lengths: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per triangle: graph node ids and planar positions of its corners followed by the k points on each side."""
    n = complex_.vertex_count
    inc = complex_.incidence
    ta = complex_.triangle_array
    l01, l12, l02 = lengths[inc[:, FRONT]], lengths[inc[:, BACK]], lengths[inc[:, LONG]]
    x2 = (l01**2 + l02**2 - l12**2) / (2.0 * l01)
    y2 = np.sqrt(np.maximum(l02**2 - x2**2, 0.0))
    nf = complex_.triangle_count
    corners = np.zeros((nf, 3, 2))
    corners[:, 1, 0] = l01
    corners[:, 2, 0] = x2
    corners[:, 2, 1] = y2
    frac = (np.arange(k) + 1.0) / (k + 1)
    ends = {FRONT: (0, 1), BACK: (1, 2), LONG: (0, 2)}
    points = [corners]
    nodes = [ta]
    for side in (FRONT, BACK, LONG):
        lo, hi = ends[side]
        start, stop = corners[:, lo, None, :], corners[:, hi, None, :]
        points.append(start + frac[None, :, None] * (stop - start))
        nodes.append(n + inc[:, side, None] * k + np.arange(k)[None, :])
    return np.concatenate(nodes, axis=1), np.concatenate(points, axis=1)


def _steiner_segments(
    complex_: Complex2,
    lengths: np.ndarray,
    k: int,
    bits: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Straight segments of the Steiner graph (one direction each) and, per segment, whether it swaps sheets.

    A point on an edge sits on the sheet of the edge's lower endpoint; inside a
    triangle a node is offset from the sheet of v0 by α(v0, lower endpoint).
    """
    n, ne = complex_.vertex_count, complex_.edge_count
    ea = complex_.edge_array
    a = np.zeros(ne, dtype=bool) if bits is None else np.asarray(bits, dtype=bool)
    chain = np.concatenate([ea[:, :1], n + np.arange(ne)[:, None] * k + np.arange(k)[None, :], ea[:, 1:]], axis=1)
    rows = [chain[:, :-1].ravel()]
    cols = [chain[:, 1:].ravel()]
    data = [np.repeat(lengths / (k + 1), k + 1)]
    last = np.zeros((ne, k + 1), dtype=bool)
    last[:, -1] = True
    swap = [(last & a[:, None]).ravel()]
    if k > 0 and complex_.triangle_count:
        nodes, points = _triangle_points(complex_, lengths, k)
        pairs = _local_pairs(k)
        inc = complex_.incidence
        a01, a02 = a[inc[:, FRONT]], a[inc[:, LONG]]
        zero = np.zeros_like(a01)
        offset = np.concatenate(
            [
                np.stack([zero, a01, a02], axis=1),
                np.repeat(zero[:, None], k, axis=1),
                np.repeat(a01[:, None], k, axis=1),
                np.repeat(zero[:, None], k, axis=1),
            ],
            axis=1,
        )
        rows.append(nodes[:, pairs[:, 0]].ravel())
        cols.append(nodes[:, pairs[:, 1]].ravel())
        diff = points[:, pairs[:, 0]] - points[:, pairs[:, 1]]
        data.append(np.hypot(diff[..., 0], diff[..., 1]).ravel())
        swap.append((offset[:, pairs[:, 0]] ^ offset[:, pairs[:, 1]]).ravel())
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(data), np.concatenate(swap)


def steiner_swap_length(
    complex_: Complex2,
    lengths: np.ndarray,
    bits: np.ndarray,
    steiner_points: int,
    *,
    chunk: int = 64,
) -> float:
    """Shortest sheet-swapping loop in the double cover of the Steiner graph.

    Straight segments across triangles let the loop leave the edge directions,
    so unlike edge paths the value converges as ``steiner_points`` grows.
    """
    support = np.flatnonzero(bits)
    if support.size == 0:
        raise TrivialClassError("class is trivial, length undefined (infimum over empty set)")
    k = steiner_points
    rows, cols, data, swap = _steiner_segments(complex_, lengths, k, bits)
    size = complex_.vertex_count + complex_.edge_count * k
    shift = swap.astype(np.int64) * size
    cover = coo_matrix(
        (
            np.concatenate([data, data]),
            (np.concatenate([rows, rows + size]), np.concatenate([cols + shift, cols + size - shift])),
        ),
        shape=(2 * size, 2 * size),
    ).tocsr()
    # A swapping segment always has an endpoint on a support edge.
    on_support = complex_.vertex_count + support[:, None] * k + np.arange(k)[None, :]
    sources = np.unique(np.concatenate([complex_.edge_array[support].ravel(), on_support.ravel()]))
    best = math.inf
    for start in range(0, len(sources), chunk):
        block = sources[start : start + chunk]
        dist = np.atleast_2d(dijkstra(cover, directed=False, indices=block))
        best = min(best, float(dist[np.arange(len(block)), block + size].min()))
    if not math.isfinite(best):
        raise TrivialClassError("class is trivial, length undefined (infimum over empty set)")
    return best


@dataclass
class BallGraph:
    """Vertices plus interior points on every edge, joined by straight segments across triangles.

    Every segment is a path in the flat complex, so graph distances bound the
    intrinsic distances from above.
    """

    mc: MetricComplex
    steiner_points: int = field(default_factory=lambda: settings.steiner_points)

    @cached_property
    def graph(self) -> csr_matrix:
        complex_ = self.mc.complex
        r, c, d, _ = _steiner_segments(complex_, self.mc.lengths, self.steiner_points)
        size = complex_.vertex_count + complex_.edge_count * self.steiner_points
        both = (np.concatenate([r, c]), np.concatenate([c, r]))
        return coo_matrix((np.concatenate([d, d]), both), shape=(size, size)).tocsr()

    def distances(self, source: int) -> np.ndarray:
        """Distances from ``source`` to every vertex of the complex."""
        dist = dijkstra(self.graph, directed=False, indices=source)
        return dist[: self.mc.complex.vertex_count]

    def distances_from(self, sources: Sequence[int]) -> np.ndarray:
        dist = dijkstra(self.graph, directed=False, indices=np.asarray(sources, dtype=np.int64))
        return np.atleast_2d(dist)[:, : self.mc.complex.vertex_count]

    @cached_property
    def corner_geometry(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per triangle and corner w: angle at w, altitude from w, the polar interval of the
        triangle measured from the foot of that altitude, and the longer incident side."""
        complex_, lengths = self.mc.complex, self.mc.lengths
        inc = complex_.incidence
        l01, l12, l02 = lengths[inc[:, FRONT]], lengths[inc[:, BACK]], lengths[inc[:, LONG]]
        # Corner w: (incident a, incident b, opposite c) and the indices of the other two corners.
        sides = [(l01, l02, l12, 1, 2), (l01, l12, l02, 0, 2), (l12, l02, l01, 0, 1)]
        area = self.mc.areas
        shape = (complex_.triangle_count, 3)
        angle, altitude, start, stop, reach = (np.empty(shape) for _ in range(5))
        for w, (a, b, c, _, _) in enumerate(sides):
            cos = np.clip((a**2 + b**2 - c**2) / (2.0 * a * b), -1.0, 1.0)
            angle[:, w] = np.arccos(cos)
            altitude[:, w] = 2.0 * area / c
            reach[:, w] = np.maximum(a, b)
        for w, (_, _, _, p, q) in enumerate(sides):
            start[:, w] = angle[:, p] - 0.5 * math.pi
            stop[:, w] = 0.5 * math.pi - angle[:, q]
        return angle, altitude, start, stop, reach


def _clipped_disk_area(
    rho: np.ndarray,
    angle: np.ndarray,
    altitude: np.ndarray,
    start: np.ndarray,
    stop: np.ndarray,
) -> np.ndarray:
    """Exact area of a triangle intersected with a disk of radius rho centred at one of its corners."""
    rho = np.maximum(rho, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        half = np.arccos(np.clip(altitude / np.where(rho > 0, rho, 1.0), -1.0, 1.0))
    half = np.where(rho > altitude, half, 0.0)
    lo = np.maximum(start, -half)
    hi = np.minimum(stop, half)
    cut = np.maximum(hi - lo, 0.0)
    flat = np.where(cut > 0, 0.5 * altitude**2 * (np.tan(hi) - np.tan(lo)), 0.0)
    return flat + 0.5 * rho**2 * (angle - cut)


def bracket_from_distances(graph: BallGraph, dist: np.ndarray, radius: float) -> BallBracket:
    complex_ = graph.mc.complex
    areas = graph.mc.areas
    if complex_.triangle_count == 0:
        return BallBracket(radius, 0.0, 0.0)
    d = dist[complex_.triangle_array]
    angle, altitude, start, stop, reach = graph.corner_geometry
    rho = np.where(np.isfinite(d), radius - d, -1.0)
    piece = _clipped_disk_area(rho, angle, altitude, start, stop)
    piece = np.where(rho >= reach, areas[:, None], piece)
    lower_t = np.minimum(piece.max(axis=1), areas)
    touched = (d <= radius).any(axis=1)
    return BallBracket(radius, math.fsum(lower_t.tolist()), math.fsum(areas[touched].tolist()))


def ball_area(
    mc: MetricComplex,
    x: int,
    r: float,
    *,
    steiner_points: Optional[int] = None,
    graph: Optional[BallGraph] = None,
) -> BallBracket:
    """Bracket the area of the metric ball B(x, r)."""
    if r < 0:
        raise SystolicError("radius must be non-negative", code="INVALID_RADIUS", details={"radius": r})
    k = settings.steiner_points if steiner_points is None else steiner_points
    graph = graph or BallGraph(mc, k)
    return bracket_from_distances(graph, graph.distances(x), float(r))


def ball_profile(graph: BallGraph, x: int, radii: Sequence[float]) -> List[BallBracket]:
    dist = graph.distances(x)
    return [bracket_from_distances(graph, dist, float(r)) for r in radii]
