"""Linear algebra over the two-element field and the simplicial (co)chain complex.

Homology is reduced throughout: degree 0 is taken relative to the
augmentation, so a connected complex has ``b0 == 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from app.complex_core import BACK, FRONT, Complex2
from app.errors import DegreeMismatchError, NotACocycleError

logger = logging.getLogger("systolic.z2")


class Z2Vector:
    """Degree-tagged bit vector over the simplices of one degree."""

    __slots__ = ("degree", "bits")

    def __init__(self, degree: int, bits: Iterable[int] | np.ndarray) -> None:
        if degree not in (0, 1, 2):
            raise DegreeMismatchError("degree must be 0, 1 or 2", details={"degree": degree})
        arr = np.array(bits, dtype=bool).ravel()
        arr.setflags(write=False)
        self.degree = int(degree)
        self.bits = arr

    @classmethod
    def zeros(cls, complex_: Complex2, degree: int) -> "Z2Vector":
        return cls(degree, np.zeros(complex_.simplex_count(degree), dtype=bool))

    @classmethod
    def from_support(cls, complex_: Complex2, degree: int, support: Iterable[int]) -> "Z2Vector":
        size = complex_.simplex_count(degree)
        idx = np.fromiter((int(i) for i in support), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= size):
            raise DegreeMismatchError("support index out of range", details={"degree": degree, "size": size})
        # Repeated indices cancel mod 2.
        return cls(degree, np.bincount(idx, minlength=size) % 2 == 1)

    @property
    def size(self) -> int:
        return int(self.bits.size)

    @property
    def support(self) -> List[int]:
        return np.flatnonzero(self.bits).tolist()

    def is_zero(self) -> bool:
        return not bool(self.bits.any())

    def _check(self, other: "Z2Vector") -> None:
        if self.degree != other.degree or self.size != other.size:
            raise DegreeMismatchError(
                "degree mismatch",
                details={"left": [self.degree, self.size], "right": [other.degree, other.size]},
            )

    def __add__(self, other: "Z2Vector") -> "Z2Vector":
        self._check(other)
        return Z2Vector(self.degree, self.bits ^ other.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Z2Vector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.degree, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"Z2Vector(degree={self.degree}, support={self.support})"

    def check_size(self, complex_: Complex2) -> "Z2Vector":
        expected = complex_.simplex_count(self.degree)
        if self.size != expected:
            raise DegreeMismatchError(
                "vector length does not match simplex count",
                details={"degree": self.degree, "size": self.size, "expected": expected},
            )
        return self


@dataclass(frozen=True)
class Z2Matrix:
    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=bool)
        if arr.ndim != 2:
            raise DegreeMismatchError("matrix must be two-dimensional", details={"ndim": int(arr.ndim)})
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    def __matmul__(self, other: "Z2Matrix") -> "Z2Matrix":
        if self.cols != other.rows:
            raise DegreeMismatchError("matrix dimensions do not chain", details={"left": self.cols, "right": other.rows})
        prod = self.data.astype(np.int64) @ other.data.astype(np.int64)
        return Z2Matrix(prod % 2 == 1)

    def transpose(self) -> "Z2Matrix":
        return Z2Matrix(self.data.T)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return (self.data.astype(np.int64) @ np.asarray(vec, dtype=np.int64)) % 2 == 1

    def rank(self) -> int:
        return len(rref(self.data)[1])

    def is_zero(self) -> bool:
        return not bool(self.data.any())


def rref(mat: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over GF(2); returns the non-zero rows and pivot columns."""
    work = np.array(mat, dtype=bool, copy=True)
    rows, cols = work.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(work[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        mask = work[:, c].copy()
        mask[r] = False
        work[mask] ^= work[r]
        pivots.append(c)
        r += 1
    return work[:r], pivots


def rank(mat: np.ndarray) -> int:
    return len(rref(mat)[1])


def nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis of the kernel, one vector per row."""
    mat = np.asarray(mat, dtype=bool)
    cols = mat.shape[1]
    reduced, pivots = rref(mat)
    pivot_set = set(pivots)
    free = [c for c in range(cols) if c not in pivot_set]
    basis = np.zeros((len(free), cols), dtype=bool)
    for i, f in enumerate(free):
        basis[i, f] = True
        if pivots:
            basis[i, pivots] = reduced[:, f]
    return basis


class Echelon:
    """Incremental span over GF(2) keyed by leading index."""

    def __init__(self, width: int) -> None:
        self.width = width
        self._rows: Dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, vec: np.ndarray) -> np.ndarray:
        v = np.array(vec, dtype=bool, copy=True)
        while v.any():
            lead = int(np.argmax(v))
            row = self._rows.get(lead)
            if row is None:
                break
            v ^= row
        return v

    def add(self, vec: np.ndarray) -> bool:
        v = self.reduce(vec)
        if not v.any():
            return False
        self._rows[int(np.argmax(v))] = v
        return True

    def contains(self, vec: np.ndarray) -> bool:
        return not self.reduce(vec).any()


def boundary_matrix(complex_: Complex2, k: int) -> Z2Matrix:
    """∂_k as a (#(k-1)-simplices × #k-simplices) matrix; k = 0 is the augmentation."""
    if k == 0:
        return Z2Matrix(np.ones((1, complex_.vertex_count), dtype=bool))
    if k == 1:
        mat = np.zeros((complex_.vertex_count, complex_.edge_count), dtype=bool)
        if complex_.edge_count:
            cols = np.arange(complex_.edge_count)
            mat[complex_.edge_array[:, 0], cols] = True
            mat[complex_.edge_array[:, 1], cols] = True
        return Z2Matrix(mat)
    if k == 2:
        mat = np.zeros((complex_.edge_count, complex_.triangle_count), dtype=bool)
        if complex_.triangle_count:
            cols = np.arange(complex_.triangle_count)
            for face in range(3):
                mat[complex_.incidence[:, face], cols] = True
        return Z2Matrix(mat)
    if k == 3:
        return Z2Matrix(np.zeros((complex_.triangle_count, 0), dtype=bool))
    raise DegreeMismatchError("boundary degree must be in 0..3", details={"k": k})


def boundary(complex_: Complex2, chain: Z2Vector) -> Z2Vector:
    chain.check_size(complex_)
    if chain.degree == 0:
        raise DegreeMismatchError("boundary of a 0-chain is not a chain", details={"degree": 0})
    return Z2Vector(chain.degree - 1, boundary_matrix(complex_, chain.degree).apply(chain.bits))


def coboundary(complex_: Complex2, cochain: Z2Vector) -> Z2Vector:
    cochain.check_size(complex_)
    bits = cochain.bits
    if cochain.degree == 0:
        if complex_.edge_count == 0:
            return Z2Vector.zeros(complex_, 1)
        return Z2Vector(1, bits[complex_.edge_array[:, 0]] ^ bits[complex_.edge_array[:, 1]])
    if cochain.degree == 1:
        if complex_.triangle_count == 0:
            return Z2Vector.zeros(complex_, 2)
        vals = bits[complex_.incidence]
        return Z2Vector(2, vals[:, 0] ^ vals[:, 1] ^ vals[:, 2])
    raise DegreeMismatchError("no 3-simplices: coboundary of a 2-cochain is undefined", details={"degree": 2})


def is_cocycle(complex_: Complex2, cochain: Z2Vector) -> bool:
    if cochain.degree == 2:
        cochain.check_size(complex_)
        return True
    return coboundary(complex_, cochain).is_zero()


def is_cycle(complex_: Complex2, chain: Z2Vector) -> bool:
    if chain.degree == 0:
        chain.check_size(complex_)
        return int(chain.bits.sum()) % 2 == 0
    return boundary(complex_, chain).is_zero()


def _coboundary_image(complex_: Complex2, degree: int) -> np.ndarray:
    """Rows spanning the coboundaries in the given degree."""
    # Rows of ∂_k are the coboundaries of (k-1)-simplex indicators; degree 0 gets the constants.
    return boundary_matrix(complex_, degree).data


def is_coboundary(complex_: Complex2, cochain: Z2Vector) -> bool:
    cochain.check_size(complex_)
    if cochain.is_zero():
        return True
    span = Echelon(cochain.size)
    for row in _coboundary_image(complex_, cochain.degree):
        span.add(row)
    return span.contains(cochain.bits)


def reduce_support(complex_: Complex2, cochain: Z2Vector) -> Z2Vector:
    """Cohomologous 1-cochain of locally minimal support, by greedy vertex flips."""
    if cochain.degree != 1:
        raise DegreeMismatchError("support reduction needs a 1-cochain", details={"degree": cochain.degree})
    cochain.check_size(complex_)
    if complex_.edge_count == 0:
        return cochain
    bits = cochain.bits.copy()
    ends = complex_.edge_array
    degree = np.bincount(ends.ravel(), minlength=complex_.vertex_count)
    vertex_edges = [[] for _ in range(complex_.vertex_count)]
    for idx, (u, v) in enumerate(complex_.edges):
        vertex_edges[u].append(idx)
        vertex_edges[v].append(idx)
    while True:
        hot = ends[bits].ravel()
        gain = 2 * np.bincount(hot, minlength=complex_.vertex_count) - degree
        best = int(np.argmax(gain))
        if gain[best] <= 0:
            break
        bits[vertex_edges[best]] ^= True
    return Z2Vector(1, bits)


def cup_product(complex_: Complex2, alpha: Z2Vector, beta: Z2Vector) -> Z2Vector:
    """Ordered simplicial cup product with front-face/back-face evaluation."""
    alpha.check_size(complex_)
    beta.check_size(complex_)
    p, q = alpha.degree, beta.degree
    if p + q > 2:
        raise DegreeMismatchError("cup product degree exceeds 2", details={"left": p, "right": q})
    a, b = alpha.bits, beta.bits
    if p == 0 and q == 0:
        return Z2Vector(0, a & b)
    if p + q == 1:
        if complex_.edge_count == 0:
            return Z2Vector.zeros(complex_, 1)
        ends = complex_.edge_array
        if p == 0:
            return Z2Vector(1, a[ends[:, 0]] & b)
        return Z2Vector(1, a & b[ends[:, 1]])
    if complex_.triangle_count == 0:
        return Z2Vector.zeros(complex_, 2)
    tri = complex_.triangle_array
    inc = complex_.incidence
    if p == 0:
        return Z2Vector(2, a[tri[:, 0]] & b)
    if q == 0:
        return Z2Vector(2, a & b[tri[:, 2]])
    return Z2Vector(2, a[inc[:, FRONT]] & b[inc[:, BACK]])


def evaluate(cochain: Z2Vector, chain: Z2Vector) -> int:
    """Mod-2 pairing of a cochain with a chain of the same degree."""
    if cochain.degree != chain.degree or cochain.size != chain.size:
        raise DegreeMismatchError(
            "cochain and chain degrees differ",
            details={"cochain": [cochain.degree, cochain.size], "chain": [chain.degree, chain.size]},
        )
    return int(np.count_nonzero(cochain.bits & chain.bits) % 2)


@dataclass(frozen=True)
class HomologyBasis:
    degree: int
    representatives: Tuple[Z2Vector, ...]

    @property
    def rank(self) -> int:
        return len(self.representatives)


@dataclass(frozen=True)
class CohomologyBasis:
    degree: int
    representatives: Tuple[Z2Vector, ...]

    @property
    def rank(self) -> int:
        return len(self.representatives)


def _quotient(kernel: np.ndarray, image: np.ndarray, width: int) -> List[np.ndarray]:
    span = Echelon(width)
    for row in image:
        span.add(row)
    chosen: List[np.ndarray] = []
    for vec in kernel:
        if span.add(vec):
            chosen.append(np.array(vec, dtype=bool))
    return chosen


def homology_basis(complex_: Complex2, k: int) -> HomologyBasis:
    """Representatives of reduced H_k over Z2: ker ∂_k modulo im ∂_{k+1}."""
    if k not in (0, 1, 2):
        raise DegreeMismatchError("homology degree must be 0, 1 or 2", details={"k": k})
    width = complex_.simplex_count(k)
    kernel = nullspace(boundary_matrix(complex_, k).data)
    image = boundary_matrix(complex_, k + 1).data.T
    reps = _quotient(kernel, image, width)
    return HomologyBasis(k, tuple(Z2Vector(k, r) for r in reps))


def cohomology_basis(complex_: Complex2, k: int) -> CohomologyBasis:
    """Representatives of reduced H^k over Z2: ker δ_k modulo im δ_{k-1}."""
    if k not in (0, 1, 2):
        raise DegreeMismatchError("cohomology degree must be 0, 1 or 2", details={"k": k})
    width = complex_.simplex_count(k)
    # δ_k is the transpose of ∂_{k+1}.
    kernel = nullspace(boundary_matrix(complex_, k + 1).data.T)
    image = _coboundary_image(complex_, k)
    reps = _quotient(kernel, image, width)
    return CohomologyBasis(k, tuple(Z2Vector(k, r) for r in reps))


def betti_numbers(complex_: Complex2) -> Tuple[int, int, int]:
    """Reduced Z2 Betti numbers (b0, b1, b2)."""
    ranks = [boundary_matrix(complex_, k).rank() for k in (1, 2)]
    b0 = max(complex_.component_count() - 1, 0)
    b1 = complex_.edge_count - ranks[0] - ranks[1]
    b2 = complex_.triangle_count - ranks[1]
    return b0, b1, b2


def cup_pairing_matrix(
    complex_: Complex2,
    basis: Optional[CohomologyBasis] = None,
    cycles: Optional[HomologyBasis] = None,
) -> np.ndarray:
    """Array M[c, i, j] = <α_i ∪ α_j, C_c> over an H^1 basis and an H_2 basis."""
    basis = basis or cohomology_basis(complex_, 1)
    cycles = cycles or homology_basis(complex_, 2)
    b1, b2 = basis.rank, cycles.rank
    out = np.zeros((b2, b1, b1), dtype=np.uint8)
    if b1 == 0 or b2 == 0:
        return out
    inc = complex_.incidence
    alphas = np.stack([rep.bits for rep in basis.representatives])
    fronts = alphas[:, inc[:, FRONT]].astype(np.int64)
    backs = alphas[:, inc[:, BACK]].astype(np.int64)
    zs = np.stack([cyc.bits for cyc in cycles.representatives]).astype(np.int64)
    for c in range(b2):
        out[c] = ((fronts * zs[c]) @ backs.T) % 2
    return out


@dataclass(frozen=True)
class CupWitness:
    alpha: Z2Vector
    beta: Z2Vector
    cycle: Z2Vector
    indices: Tuple[int, int]


def cup_length_witness(
    complex_: Complex2,
    basis: Optional[CohomologyBasis] = None,
) -> Optional[CupWitness]:
    """First basis pair (i <= j) whose cup product pairs non-trivially with some H_2 class."""
    basis = basis or cohomology_basis(complex_, 1)
    cycles = homology_basis(complex_, 2)
    pairing = cup_pairing_matrix(complex_, basis, cycles)
    if pairing.size == 0:
        return None
    for i in range(basis.rank):
        for j in range(i, basis.rank):
            for c in range(cycles.rank):
                if pairing[c, i, j] or pairing[c, j, i]:
                    i_out, j_out = (i, j) if pairing[c, i, j] else (j, i)
                    logger.debug("cup_witness_found i=%s j=%s cycle=%s", i_out, j_out, c)
                    return CupWitness(
                        basis.representatives[i_out],
                        basis.representatives[j_out],
                        cycles.representatives[c],
                        (i_out, j_out),
                    )
    return None


def all_witness_pairs(complex_: Complex2, basis: Optional[CohomologyBasis] = None) -> List[Tuple[int, int]]:
    """Every basis pair i <= j whose cup product pairs non-trivially with H_2 in either order."""
    basis = basis or cohomology_basis(complex_, 1)
    pairing = cup_pairing_matrix(complex_, basis)
    if pairing.size == 0:
        return []
    sym = (pairing | pairing.transpose(0, 2, 1)).any(axis=0)
    return [(i, j) for i in range(basis.rank) for j in range(i, basis.rank) if sym[i, j]]


def require_cocycle(complex_: Complex2, cochain: Z2Vector) -> Z2Vector:
    if cochain.degree != 1:
        raise DegreeMismatchError("expected a 1-cochain", details={"degree": cochain.degree})
    if not is_cocycle(complex_, cochain):
        raise NotACocycleError("cochain is not a cocycle", details={"support": cochain.support})
    return cochain

