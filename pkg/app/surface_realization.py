"""Realize a Z2 2-cycle by a closed triangulated surface mapped simplicially into the complex."""
from __future__ import annotations

import dataclasses
import logging
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from app.complex_core import BACK, FRONT, LONG, Complex2, PLMetric
from app.config import settings
from app.errors import (
    ComplexValidationError,
    DegreeMismatchError,
    NotACycleError,
    NoWitnessError,
    RealizationError,
    TrivialClassError,
)
from app.z2_algebra import Z2Vector, cup_product, evaluate, is_cycle

logger = logging.getLogger("systolic.realization")

# Corner positions of each face slot inside a triangle copy, and the corner opposite to it.
_SLOT_CORNERS = {FRONT: (0, 1, 2), BACK: (1, 2, 0), LONG: (0, 2, 1)}
# Direction in which the boundary v0 -> v1 -> v2 -> v0 traverses each sorted face.
_FACE_SIGN = {FRONT: 1, BACK: 1, LONG: -1}


@dataclass(frozen=True)
class ComponentClassification:
    index: int
    vertex_count: int
    edge_count: int
    triangle_count: int
    euler_characteristic: int
    orientable: bool

    @property
    def genus(self) -> Optional[int]:
        return (2 - self.euler_characteristic) // 2 if self.orientable else None

    @property
    def crosscaps(self) -> Optional[int]:
        return None if self.orientable else 2 - self.euler_characteristic

    @property
    def name(self) -> str:
        if self.orientable:
            if self.genus == 0:
                return "sphere"
            if self.genus == 1:
                return "torus"
            return f"orientable genus {self.genus}"
        if self.crosscaps == 1:
            return "projective plane"
        if self.crosscaps == 2:
            return "Klein bottle"
        return f"non-orientable, {self.crosscaps} crosscaps"

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "vertices": self.vertex_count,
            "edges": self.edge_count,
            "triangles": self.triangle_count,
            "euler_characteristic": self.euler_characteristic,
            "orientable": self.orientable,
            "genus": self.genus,
            "crosscaps": self.crosscaps,
            "name": self.name,
        }


@dataclass(frozen=True)
class SurfaceClassification:
    components: Tuple[ComponentClassification, ...]
    triangle_component: np.ndarray

    @property
    def euler_characteristic(self) -> int:
        return sum(c.euler_characteristic for c in self.components)


@dataclass(frozen=True)
class SurfaceRealization:
    surface: Complex2
    vertex_map: np.ndarray
    edge_map: np.ndarray
    triangle_map: np.ndarray
    classification: SurfaceClassification
    attempts: int = 1
    # Set when S is a barycentric subdivision; edge_map and triangle_map then hold -1 on collapsed simplices.
    subdivided: bool = False
    triangle_carrier: Optional[np.ndarray] = None
    edge_incidence: Optional[np.ndarray] = None
    edge_displacement: Optional[np.ndarray] = None

    @property
    def components(self) -> Tuple[ComponentClassification, ...]:
        return self.classification.components

    @property
    def carriers(self) -> np.ndarray:
        """Per surface triangle, the triangle of X it lies over."""
        return self.triangle_carrier if self.subdivided else self.triangle_map

    def fundamental_class(self, component: Optional[int] = None) -> Z2Vector:
        if component is None:
            return Z2Vector(2, np.ones(self.surface.triangle_count, dtype=bool))
        return Z2Vector(2, self.classification.triangle_component == component)

    def pushforward(self, target: Complex2) -> Z2Vector:
        live = self.triangle_map[self.triangle_map >= 0]
        return Z2Vector(2, np.bincount(live, minlength=target.triangle_count) % 2 == 1)

    def area(self, areas: np.ndarray, component: Optional[int] = None) -> float:
        """Area of S (or one component) under the pulled-back metric, given the triangle areas of X."""
        carriers = self.carriers
        if component is not None:
            carriers = carriers[self.classification.triangle_component == component]
        weight = 1.0 / 6.0 if self.subdivided else 1.0
        return weight * math.fsum(np.asarray(areas)[carriers].tolist())


def _link_is_cycle(vertex: int, tris: np.ndarray) -> bool:
    link = nx.Graph()
    for tri in tris:
        others = [int(x) for x in tri if x != vertex]
        link.add_edge(others[0], others[1])
    if link.number_of_nodes() < 3:
        return False
    return nx.is_connected(link) and all(d == 2 for _, d in link.degree())


def check_closed_surface(surface: Complex2) -> None:
    counts = surface.edge_triangle_counts
    bad = np.flatnonzero(counts != 2)
    if bad.size:
        idx = int(bad[0])
        raise ComplexValidationError(
            "edge does not lie in exactly two triangles",
            code="NOT_A_CLOSED_SURFACE",
            details={"edge": idx, "simplex": list(surface.edges[idx]), "triangles": int(counts[idx])},
        )
    tri = surface.triangle_array
    order = np.argsort(tri.ravel(), kind="stable")
    owners = order // 3
    starts = np.searchsorted(tri.ravel()[order], np.arange(surface.vertex_count + 1))
    for v in range(surface.vertex_count):
        if not _link_is_cycle(v, tri[owners[starts[v] : starts[v + 1]]]):
            raise ComplexValidationError(
                "vertex link is not a single cycle",
                code="NOT_A_CLOSED_SURFACE",
                details={"vertex": v},
            )


def classify_surface(surface: Complex2) -> SurfaceClassification:
    """Per component Euler characteristic and orientability of a closed surface."""
    check_closed_surface(surface)
    inc = surface.incidence
    edge_tris: List[List[Tuple[int, int]]] = [[] for _ in range(surface.edge_count)]
    for t in range(surface.triangle_count):
        for face in (FRONT, BACK, LONG):
            edge_tris[int(inc[t, face])].append((t, face))

    component = np.full(surface.triangle_count, -1, dtype=np.int64)
    sign = np.zeros(surface.triangle_count, dtype=np.int64)
    orientable: List[bool] = []
    for seed in range(surface.triangle_count):
        if component[seed] >= 0:
            continue
        comp = len(orientable)
        ok = True
        component[seed] = comp
        sign[seed] = 1
        queue = deque([seed])
        while queue:
            t = queue.popleft()
            for face in (FRONT, BACK, LONG):
                for other, other_face in edge_tris[int(inc[t, face])]:
                    if other == t:
                        continue
                    want = -sign[t] * _FACE_SIGN[face] * _FACE_SIGN[other_face]
                    if component[other] < 0:
                        component[other] = comp
                        sign[other] = want
                        queue.append(other)
                    elif sign[other] != want:
                        ok = False
        orientable.append(ok)

    tri_comp = component
    edge_comp = tri_comp[[lst[0][0] for lst in edge_tris]] if surface.edge_count else np.zeros(0, np.int64)
    vertex_comp = np.full(surface.vertex_count, -1, dtype=np.int64)
    if surface.triangle_count:
        vertex_comp[surface.triangle_array.ravel()] = np.repeat(tri_comp, 3)
    count = len(orientable)
    v_counts = np.bincount(vertex_comp[vertex_comp >= 0], minlength=count)
    e_counts = np.bincount(edge_comp, minlength=count)
    f_counts = np.bincount(tri_comp, minlength=count)
    components = tuple(
        ComponentClassification(
            index=c,
            vertex_count=int(v_counts[c]),
            edge_count=int(e_counts[c]),
            triangle_count=int(f_counts[c]),
            euler_characteristic=int(v_counts[c] - e_counts[c] + f_counts[c]),
            orientable=orientable[c],
        )
        for c in range(count)
    )
    tri_comp.setflags(write=False)
    return SurfaceClassification(components, tri_comp)


@dataclass(frozen=True)
class _Gluing:
    """Slot pairing of the triangle copies of a cycle, before deciding how to triangulate it."""

    support: np.ndarray
    tri: np.ndarray
    first: np.ndarray
    second: np.ndarray
    corner_lo: np.ndarray
    corner_hi: np.ndarray
    image_edge: np.ndarray
    vertex_of_corner: np.ndarray
    vertex_map: np.ndarray

    @property
    def copies(self) -> int:
        return len(self.support)

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_map)

    @cached_property
    def glued(self) -> np.ndarray:
        return np.stack(
            [self.vertex_of_corner[self.corner_lo[self.first]], self.vertex_of_corner[self.corner_hi[self.first]]],
            axis=1,
        )

    @property
    def simplicial(self) -> bool:
        keys = self.glued[:, 0] * self.vertex_count + self.glued[:, 1]
        return np.unique(keys).size == keys.size


def _pair_slots(
    complex_: Complex2,
    support: np.ndarray,
    rng: Optional[np.random.Generator],
) -> _Gluing:
    n = len(support)
    tri = complex_.triangle_array[support]
    inc = complex_.incidence[support]
    copies = np.repeat(np.arange(n), 3)
    faces = np.tile([FRONT, BACK, LONG], n)
    lo = np.array([_SLOT_CORNERS[f][0] for f in (FRONT, BACK, LONG)] * n)
    hi = np.array([_SLOT_CORNERS[f][1] for f in (FRONT, BACK, LONG)] * n)
    opp = np.array([_SLOT_CORNERS[f][2] for f in (FRONT, BACK, LONG)] * n)
    image_edge = inc[copies, faces]
    opposite_vertex = tri[copies, opp]
    tiebreak = rng.random(3 * n) if rng is not None else copies
    order = np.lexsort((tiebreak, opposite_vertex, image_edge))
    first, second = order[0::2], order[1::2]
    if not np.array_equal(image_edge[first], image_edge[second]):
        raise NotACycleError("boundary edge copies do not cancel in pairs")

    corner_lo = 3 * copies + lo
    corner_hi = 3 * copies + hi
    rows = np.concatenate([corner_lo[first], corner_hi[first]])
    cols = np.concatenate([corner_lo[second], corner_hi[second]])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(3 * n, 3 * n))
    count, labels = connected_components(graph, directed=False)

    corner_image = tri.ravel()
    class_image = np.empty(count, dtype=np.int64)
    class_image[labels] = corner_image
    class_min = np.full(count, 3 * n, dtype=np.int64)
    np.minimum.at(class_min, labels, np.arange(3 * n))
    rank = np.empty(count, dtype=np.int64)
    rank[np.lexsort((class_min, class_image))] = np.arange(count)
    vertex_map = np.empty(count, dtype=np.int64)
    vertex_map[rank] = class_image
    return _Gluing(support, tri, first, second, corner_lo, corner_hi, image_edge, rank[labels], vertex_map)


def _simplicial_surface(gluing: _Gluing) -> Tuple[Complex2, np.ndarray, np.ndarray]:
    glued = gluing.glued
    tri_vertices = gluing.vertex_of_corner.reshape(gluing.copies, 3)
    tri_order = np.lexsort((tri_vertices[:, 2], tri_vertices[:, 1], tri_vertices[:, 0]))
    edge_order = np.lexsort((glued[:, 1], glued[:, 0]))
    surface = Complex2(
        gluing.vertex_count,
        tuple(map(tuple, glued[edge_order].tolist())),
        tuple(map(tuple, tri_vertices[tri_order].tolist())),
    )
    return surface, gluing.vertex_map, gluing.support[tri_order]


def _subdivided_surface(complex_: Complex2, gluing: _Gluing) -> SurfaceRealization:
    """Barycentric subdivision of the glued surface, mapped to X by sending every barycenter to the
    lowest vertex of its image simplex.

    The glued surface may have several edges over the same pair of vertices; its barycentric
    subdivision never does, because every edge and triangle of it has distinct corner vertices.
    """
    n = gluing.copies
    slots = 3 * n
    pairs = len(gluing.first)
    v_count = gluing.vertex_count
    copy_of_slot = np.arange(slots) // 3
    slot_class = np.empty(slots, dtype=np.int64)
    slot_class[gluing.first] = np.arange(pairs)
    slot_class[gluing.second] = np.arange(pairs)

    edge_node = v_count + slot_class
    copy_node = v_count + pairs + np.arange(n)
    node_count = v_count + pairs + n
    image = np.concatenate(
        [gluing.vertex_map, complex_.edge_array[gluing.image_edge[gluing.first], 0], gluing.tri[:, 0]]
    )
    dim = np.concatenate([np.zeros(v_count, np.int64), np.ones(pairs, np.int64), np.full(n, 2, np.int64)])
    rank = np.empty(node_count, dtype=np.int64)
    rank[np.lexsort((np.arange(node_count), dim, image))] = np.arange(node_count)
    new_image = np.empty(node_count, dtype=np.int64)
    new_image[rank] = image

    eye = np.eye(3)
    lo_pos = gluing.corner_lo % 3
    hi_pos = gluing.corner_hi % 3
    corner_vertex = gluing.vertex_of_corner
    midpoint = 0.5 * (eye[lo_pos] + eye[hi_pos])
    centre = np.full((1, 3), 1.0 / 3.0)

    f = gluing.first
    edge_ends = np.concatenate(
        [
            np.stack([corner_vertex[gluing.corner_lo[f]], edge_node[f]], axis=1),
            np.stack([corner_vertex[gluing.corner_hi[f]], edge_node[f]], axis=1),
            np.stack([corner_vertex, np.repeat(copy_node, 3)], axis=1),
            np.stack([edge_node, copy_node[copy_of_slot]], axis=1),
        ]
    )
    displacement = np.concatenate(
        [
            eye[lo_pos[f]] - midpoint[f],
            eye[hi_pos[f]] - midpoint[f],
            np.tile(eye, (n, 1)) - centre,
            midpoint - centre,
        ]
    )
    edge_copy = np.concatenate([copy_of_slot[f], copy_of_slot[f], np.repeat(np.arange(n), 3), copy_of_slot])
    tri_ends = np.concatenate(
        [
            np.stack([corner_vertex[gluing.corner_lo], edge_node, copy_node[copy_of_slot]], axis=1),
            np.stack([corner_vertex[gluing.corner_hi], edge_node, copy_node[copy_of_slot]], axis=1),
        ]
    )
    tri_copy = np.concatenate([copy_of_slot, copy_of_slot])

    edges = np.sort(rank[edge_ends], axis=1)
    tris = np.sort(rank[tri_ends], axis=1)
    edge_order = np.lexsort((edges[:, 1], edges[:, 0]))
    tri_order = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))
    surface = Complex2(
        node_count,
        tuple(map(tuple, edges[edge_order].tolist())),
        tuple(map(tuple, tris[tri_order].tolist())),
    )

    edge_images = new_image[surface.edge_array]
    edge_map = np.where(
        edge_images[:, 0] != edge_images[:, 1], complex_.edge_ids(edge_images), -1
    )
    tri_images = new_image[surface.triangle_array]
    tri_live = (np.diff(tri_images, axis=1) > 0).all(axis=1)
    triangle_map = np.where(tri_live, complex_.triangle_ids(tri_images), -1)
    carriers = gluing.support[tri_copy[tri_order]]
    edge_incidence = complex_.incidence[gluing.support[edge_copy[edge_order]]]
    return SurfaceRealization(
        surface,
        new_image,
        edge_map,
        triangle_map,
        classify_surface(surface),
        subdivided=True,
        triangle_carrier=carriers,
        edge_incidence=edge_incidence,
        edge_displacement=displacement[edge_order],
    )


def realize_cycle(
    complex_: Complex2,
    cycle: Z2Vector,
    *,
    pairing: str = "ordered",
    seed: int = 0,
    max_attempts: Optional[int] = None,
) -> SurfaceRealization:
    """Build a closed surface S and a simplicial map h: S -> X with h_*[S] = [cycle].

    The pairing is re-drawn up to ``max_attempts`` times looking for a gluing in which no two
    surface edges share both endpoints; h is then non-degenerate. Otherwise S is the barycentric
    subdivision of the first gluing and h collapses the simplices that do not carry the cycle.
    """
    if cycle.degree != 2:
        raise DegreeMismatchError("surface realization needs a 2-chain", details={"degree": cycle.degree})
    cycle.check_size(complex_)
    if cycle.is_zero():
        raise TrivialClassError("trivial class: the 2-cycle is zero")
    if not is_cycle(complex_, cycle):
        raise NotACycleError("not a cycle", details={"support": cycle.support})
    if pairing not in ("ordered", "random"):
        raise RealizationError("unknown pairing mode", code="INVALID_PARAMETERS", details={"pairing": pairing})
    attempts_allowed = max_attempts if max_attempts is not None else settings.realization_max_attempts
    support = np.flatnonzero(cycle.bits)
    rng = np.random.default_rng(seed)
    fallback: Optional[_Gluing] = None
    for attempt in range(1, attempts_allowed + 1):
        shuffle = pairing == "random" or attempt > 1
        gluing = _pair_slots(complex_, support, rng if shuffle else None)
        if not gluing.simplicial:
            fallback = fallback or gluing
            logger.debug("surface_gluing_retry attempt=%s", attempt)
            continue
        surface, vertex_map, triangle_map = _simplicial_surface(gluing)
        edge_map = complex_.edge_ids(vertex_map[surface.edge_array])
        realization = SurfaceRealization(
            surface, vertex_map, edge_map, triangle_map, classify_surface(surface), attempt
        )
        break
    else:
        if fallback is None:
            fallback = _pair_slots(complex_, support, rng if pairing == "random" else None)
        realization = dataclasses.replace(_subdivided_surface(complex_, fallback), attempts=attempts_allowed)
    for arr in (realization.vertex_map, realization.edge_map, realization.triangle_map):
        arr.setflags(write=False)
    logger.info(
        "surface_realized triangles=%s vertices=%s components=%s attempts=%s subdivided=%s",
        realization.surface.triangle_count,
        realization.surface.vertex_count,
        len(realization.components),
        realization.attempts,
        realization.subdivided,
    )
    return realization


def pullback_metric(realization: SurfaceRealization, metric: PLMetric) -> PLMetric:
    """Edge lengths of S induced by h; on a subdivided surface, the flat lengths inside each carrier triangle."""
    if not realization.subdivided:
        return PLMetric(tuple(metric.array[realization.edge_map].tolist()))
    sides = metric.array[realization.edge_incidence]
    # Barycentric displacement (u, v, w) over (x0, x1, x2): |d|^2 = -(|x1x2|^2 vw + |x0x2|^2 uw + |x0x1|^2 uv).
    front, back, long = sides[:, FRONT], sides[:, BACK], sides[:, LONG]
    u, v, w = realization.edge_displacement.T
    squared = -(back**2 * v * w + long**2 * u * w + front**2 * u * v)
    return PLMetric(tuple(np.sqrt(np.maximum(squared, 0.0)).tolist()))


def pullback_cochain(realization: SurfaceRealization, cochain: Z2Vector) -> Z2Vector:
    maps = {0: realization.vertex_map, 1: realization.edge_map, 2: realization.triangle_map}
    index = maps[cochain.degree]
    return Z2Vector(cochain.degree, np.where(index >= 0, cochain.bits[index], False))


def witness_component(realization: SurfaceRealization, alpha: Z2Vector, beta: Z2Vector) -> int:
    """A component S_i of the surface with <h*α ∪ h*β, [S_i]> = 1."""
    surface = realization.surface
    product = cup_product(surface, pullback_cochain(realization, alpha), pullback_cochain(realization, beta))
    for comp in realization.components:
        if evaluate(product, realization.fundamental_class(comp.index)):
            return comp.index
    raise NoWitnessError("cup product vanishes on every surface component")
