"""Concrete topological computations behind the trajectory bounds.

* permutation cells of the torus ``T^p`` modulo the dihedral group, their
  invariant ``I`` and the moves that connect cells inside ``T^p/D_p - Delta``;
* a hand-built relative cell complex for ``(S^2)^3 / D_3`` modulo the diagonal;
* Schubert calculus on the real Grassmannian ``G_{2,n+1}`` and the Betti sum of
  the circle bundle ``V_{n,p}`` of regular inscribed polygons.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .homology import BettiProfile, ChainComplex, FFMatrix, rank

# ---------------------------------------------------------------------------
# Torus cells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusCell:
    """Open cell ``{x_{perm[0]} < x_{perm[1]} < ... }`` with 1-based labels."""

    perm: Tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(v) for v in self.perm)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise ValueError(f"{perm} is not a permutation of 1..{len(perm)}")
        object.__setattr__(self, "perm", perm)

    @property
    def p(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, p: int) -> "TorusCell":
        return cls(tuple(range(1, p + 1)))

    def positions(self) -> Tuple[int, ...]:
        """``positions()[i-1]`` is the rank of coordinate ``x_i`` in the cell."""
        pos = [0] * self.p
        for r, v in enumerate(self.perm):
            pos[v - 1] = r
        return tuple(pos)

    def __str__(self):
        return "<".join(f"x{v}" for v in self.perm)


def _invariant_rows(perms: np.ndarray) -> np.ndarray:
    """``I`` for each row of a 0-based permutation array."""
    n, p = perms.shape
    pos = np.empty_like(perms)
    pos[np.arange(n)[:, None], perms] = np.arange(p)
    desc = (pos > np.roll(pos, -1, axis=1)).sum(axis=1)
    return np.abs(2 * desc - p)


def cell_invariant(c: TorusCell) -> int:
    """Absolute difference of descents and ascents over the cyclic pairs."""
    return int(_invariant_rows(np.array([c.perm]) - 1)[0])


def _dihedral_relabelings(p: int) -> np.ndarray:
    """All maps ``v -> +-v + k (mod p)`` on 0-based labels, shape (2p, p)."""
    v = np.arange(p)
    rows = [(v + k) % p for k in range(p)] + [(-v + k) % p for k in range(p)]
    return np.array(rows)


def _moves_rows(perms: np.ndarray) -> List[np.ndarray]:
    """Every one-move neighbour of each row, as a list of (n, p) arrays."""
    n, p = perms.shape
    out = [t[perms] for t in _dihedral_relabelings(p)]
    out.append(np.roll(perms, -1, axis=1))
    for i in range(p - 1):
        swapped = perms.copy()
        swapped[:, [i, i + 1]] = swapped[:, [i + 1, i]]
        gap = np.abs(perms[:, i + 1] - perms[:, i])
        ok = (gap >= 2) & (gap <= p - 2)
        # blocked swaps map a cell to itself
        out.append(np.where(ok[:, None], swapped, perms))
    return out


def cell_moves(c: TorusCell) -> List[TorusCell]:
    """Distinct cells reached from ``c`` by one move.

    Moves are relabelling by a dihedral symmetry of the indices, carrying the
    smallest coordinate once around the circle, and swapping two neighbouring
    coordinates whose indices are not cyclically adjacent.
    """
    base = np.array([c.perm]) - 1
    seen = []
    for rows in _moves_rows(base):
        cell = TorusCell(tuple(int(v) + 1 for v in rows[0]))
        if cell not in seen:
            seen.append(cell)
    return seen


def _encode(perms: np.ndarray) -> np.ndarray:
    p = perms.shape[1]
    return perms @ (p ** np.arange(p - 1, -1, -1, dtype=np.int64))


@lru_cache(maxsize=None)
def torus_components(p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Move-closure classes of all ``p!`` cells.

    Returns the 0-based permutations (lexicographic) and a class label per row.
    """
    if p % 2 == 0 or not 3 <= p <= 9:
        raise ValueError("p must be odd with 3 <= p <= 9")
    perms = np.array(list(itertools.permutations(range(p))), dtype=np.int64)
    codes = _encode(perms)
    n = len(perms)
    src, dst = [], []
    for rows in _moves_rows(perms):
        src.append(np.arange(n))
        dst.append(np.searchsorted(codes, _encode(rows)))
    src, dst = np.concatenate(src), np.concatenate(dst)
    graph = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    perms.setflags(write=False)
    labels.setflags(write=False)
    return perms, labels


def component_count(p: int) -> int:
    """Number of classes of top cells of ``T^p/D_p - Delta``."""
    _, labels = torus_components(p)
    return int(labels.max()) + 1


def component_invariants(p: int) -> Dict[int, FrozenSet[int]]:
    """Values of ``I`` occurring in each class."""
    perms, labels = torus_components(p)
    inv = _invariant_rows(perms)
    return {int(k): frozenset(int(v) for v in np.unique(inv[labels == k])) for k in np.unique(labels)}


def torus_quotient_profile(p: int) -> BettiProfile:
    """Relative mod-2 homology of ``(T^p/D_p, Delta)``: the component count in degrees p-1 and p."""
    k = component_count(p)
    dims = [0] * (p + 1)
    dims[p - 1] = dims[p] = k
    return BettiProfile(tuple(dims), 2)


# ---------------------------------------------------------------------------
# The relative complex of (S^2)^3 / D_3 modulo the diagonal
# ---------------------------------------------------------------------------

S2_TRIPLE_CELLS: Dict[int, Tuple[str, ...]] = {
    3: ("kappa1", "kappa2"),
    4: ("alpha1", "alpha2", "beta1", "beta2", "beta3", "beta4", "gamma1", "gamma2"),
    5: tuple(f"sigma{i}" for i in range(1, 7)) + tuple(f"delta{i}" for i in range(1, 7)),
    6: tuple(f"omega{i}" for i in range(1, 7)),
}

S2_TRIPLE_BOUNDARY: Dict[str, Tuple[str, ...]] = {
    "omega1": ("delta1", "delta6", "sigma1", "sigma6"),
    "omega2": ("delta3", "delta6", "sigma3", "sigma6"),
    "omega3": ("delta1", "delta4", "sigma1", "sigma4"),
    "omega4": ("delta2", "delta3", "sigma4", "sigma5"),
    "omega5": ("delta4", "delta5", "sigma2", "sigma3"),
    "omega6": ("delta2", "delta5", "sigma2", "sigma5"),
    "sigma1": ("alpha2", "beta4"),
    "sigma2": ("alpha2", "beta2"),
    "sigma3": ("alpha2", "beta3", "beta4"),
    "sigma4": ("alpha2", "beta1", "beta2"),
    "sigma5": ("alpha2", "beta3"),
    "sigma6": ("alpha2", "beta1"),
    "delta1": ("alpha1", "beta1"),
    "delta2": ("alpha1", "beta2"),
    "delta3": ("alpha1", "beta1", "beta3"),
    "delta4": ("alpha1", "beta2", "beta4"),
    "delta5": ("alpha1", "beta3"),
    "delta6": ("alpha1", "beta4"),
    "gamma1": ("kappa1", "kappa2"),
    "gamma2": ("kappa1", "kappa2"),
}


def build_s2_triple_complex() -> ChainComplex:
    """Cells in degrees 3..6 over Z_2; unlisted cells have zero boundary."""
    boundaries = {}
    for k, names in S2_TRIPLE_CELLS.items():
        lower = S2_TRIPLE_CELLS.get(k - 1, ())
        index = {name: i for i, name in enumerate(lower)}
        cols = [{index[f]: 1 for f in S2_TRIPLE_BOUNDARY.get(name, ())} for name in names]
        boundaries[k] = FFMatrix.from_columns(len(lower), cols, q=2)
    dims = {k: len(v) for k, v in S2_TRIPLE_CELLS.items()}
    return ChainComplex(dims, boundaries, field=2, names=S2_TRIPLE_CELLS)


def cell_vector(C: ChainComplex, degree: int, names: Iterable[str]) -> np.ndarray:
    """Indicator vector of a sum of named cells."""
    v = np.zeros(C.dim(degree), dtype=np.int64)
    for name in names:
        v[C.names[degree].index(name)] += 1
    return v % C.field


# ---------------------------------------------------------------------------
# Schubert calculus on G_{2, n+1} with Z_2 coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class SchubertClass:
    """Partition ``(2,...,2,1,...,1)`` indexing a cell of ``G_{2,n+1}``."""

    partition: Tuple[int, ...]
    n: int

    def __post_init__(self):
        part = tuple(int(v) for v in self.partition)
        if any(v not in (1, 2) for v in part):
            raise ValueError(f"parts must be 1 or 2: {part}")
        if any(a < b for a, b in zip(part, part[1:])):
            raise ValueError(f"partition must be weakly decreasing: {part}")
        if len(part) > self.n - 1:
            raise ValueError(f"length {len(part)} exceeds {self.n - 1}")
        object.__setattr__(self, "partition", part)

    @property
    def degree(self) -> int:
        return sum(self.partition)

    def __str__(self):
        return "sigma_" + (",".join(map(str, self.partition)) or "0")


@dataclass(frozen=True)
class CohomologyRingElement:
    """Formal Z_2-sum of Schubert classes."""

    terms: FrozenSet[SchubertClass] = frozenset()

    def __add__(self, other: "CohomologyRingElement") -> "CohomologyRingElement":
        return CohomologyRingElement(self.terms ^ other.terms)

    def __bool__(self):
        return bool(self.terms)

    def partitions(self) -> List[Tuple[int, ...]]:
        return sorted(t.partition for t in self.terms)


def schubert_basis(q: int, n: int) -> List[SchubertClass]:
    """Classes of degree ``q`` in ``G_{2,n+1}``, ordered by number of twos."""
    out = []
    for twos in range(q // 2 + 1):
        ones = q - 2 * twos
        if twos + ones <= n - 1:
            out.append(SchubertClass((2,) * twos + (1,) * ones, n))
    return out


def grassmann_betti(q: int, n: int) -> int:
    if not 0 <= q <= 2 * (n - 1):
        return 0
    if q <= n - 1:
        return q // 2 + 1
    return (2 * (n - 1) - q) // 2 + 1


def pieri_multiply(a: int, b: SchubertClass, n: int) -> CohomologyRingElement:
    """``sigma_a`` times ``sigma_b`` by the Pieri rule, truncated to ``G_{2,n+1}``."""
    if a not in (1, 2):
        raise ValueError("a must be 1 or 2")
    if b.n != n:
        raise ValueError("class lives in a different Grassmannian")
    bp = b.partition
    k = len(bp)
    target = a + sum(bp)
    lows = list(bp) + [0]
    highs = [2] + list(bp)
    terms = set()
    for c in itertools.product(*(range(lo, hi + 1) for lo, hi in zip(lows, highs))):
        if sum(c) != target:
            continue
        c = tuple(v for v in c if v)
        if len(c) <= n - 1:
            cls = SchubertClass(c, n)
            terms ^= {cls}
    return CohomologyRingElement(frozenset(terms))


def multiplication_matrix(a: int, q: int, n: int) -> FFMatrix:
    """Matrix of ``sigma_a: H^q -> H^{q+a}`` in the Schubert bases."""
    src, dst = schubert_basis(q, n), schubert_basis(q + a, n)
    index = {c: i for i, c in enumerate(dst)}
    cols = [{index[t]: 1 for t in pieri_multiply(a, c, n).terms} for c in src]
    return FFMatrix.from_columns(len(dst), cols, q=2)


def sigma2_rank(q: int, n: int) -> int:
    """Rank of multiplication by the Euler class ``sigma_2`` from degree ``q``."""
    if q < 0:
        return 0
    return rank(multiplication_matrix(2, q, n))


def vnp_rows(n: int) -> Tuple[List[int], List[int]]:
    """Dimensions of the two rows surviving the differential ``sigma_2``.

    Row 0 is the cokernel, row 1 the kernel of multiplication by ``sigma_2``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    top = 2 * (n - 1)
    bottom = [grassmann_betti(q, n) - sigma2_rank(q - 2, n) for q in range(top + 1)]
    upper = [grassmann_betti(q, n) - sigma2_rank(q, n) for q in range(top + 1)]
    return bottom, upper


def vnp_betti_sum(n: int) -> int:
    """Total mod-2 Betti number of ``V_{n,p}``."""
    bottom, upper = vnp_rows(n)
    return sum(bottom) + sum(upper)


def vnp_profile(n: int) -> BettiProfile:
    """Per-degree Betti numbers; the kernel row is shifted up by the fibre."""
    bottom, upper = vnp_rows(n)
    dims = [0] * (len(bottom) + 1)
    for q, d in enumerate(bottom):
        dims[q] += d
    for q, d in enumerate(upper):
        dims[q + 1] += d
    return BettiProfile(tuple(dims), 2)


def schubert_bound(n: int, p: int) -> int:
    """Lower bound ``n(p-1)`` for p-periodic trajectories in a perturbed n-sphere.

    Each of the ``(p-1)/2`` rotation numbers contributes a copy of ``V_{n,p}``.
    """
    if p % 2 == 0 or p < 3:
        raise ValueError("p must be an odd integer >= 3")
    return (p - 1) // 2 * vnp_betti_sum(n)
