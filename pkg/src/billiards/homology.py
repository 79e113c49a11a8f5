"""Linear algebra over Z_q, cellular chain complexes and counting bounds.

Only q = 2 and q = 3 are exercised, but any prime works.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np


class InvalidComplexError(ValueError):
    """Boundary maps do not compose to zero or have inconsistent shapes."""


def _check_prime(q: int) -> int:
    q = int(q)
    if q < 2 or any(q % d == 0 for d in range(2, int(math.isqrt(q)) + 1)):
        raise ValueError(f"{q} is not prime")
    return q


class FFMatrix:
    """Dense matrix with entries in Z_q."""

    def __init__(self, data, q: int = 2):
        self.q = _check_prime(q)
        arr = np.array(data, dtype=np.int64)
        if arr.ndim != 2:
            arr = arr.reshape(arr.shape[0] if arr.ndim else 0, -1) if arr.size else np.zeros((0, 0), np.int64)
        self.data = np.mod(arr, self.q)
        self.data.setflags(write=False)

    @classmethod
    def zeros(cls, rows: int, cols: int, q: int = 2) -> "FFMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), q)

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[Mapping[int, int]], q: int = 2) -> "FFMatrix":
        """Matrix whose column ``j`` has entries ``columns[j]`` (row -> coef)."""
        data = np.zeros((rows, len(columns)), dtype=np.int64)
        for j, col in enumerate(columns):
            for i, c in col.items():
                data[i, j] += c
        return cls(data, q)

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.data.shape)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def T(self) -> "FFMatrix":
        return FFMatrix(self.data.T, self.q)

    def __matmul__(self, other: "FFMatrix") -> "FFMatrix":
        if self.q != other.q:
            raise ValueError("fields differ")
        return FFMatrix(self.data @ other.data, self.q)

    def apply(self, v) -> np.ndarray:
        return np.mod(self.data @ np.asarray(v, dtype=np.int64), self.q)

    def is_zero(self) -> bool:
        return not self.data.any()

    def __eq__(self, other):
        return isinstance(other, FFMatrix) and self.q == other.q and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"FFMatrix(q={self.q}, shape={self.shape})"

    def rank(self) -> int:
        return rank(self)


def row_reduce(A: FFMatrix) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over Z_q and its pivot columns."""
    q = A.q
    M = A.data.copy()
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(M[r:, c])
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            M[[r, k]] = M[[k, r]]
        M[r] = (M[r] * pow(int(M[r, c]), -1, q)) % q
        others = np.flatnonzero(M[:, c])
        others = others[others != r]
        if others.size:
            M[others] = (M[others] - np.outer(M[others, c], M[r])) % q
        pivots.append(c)
        r += 1
    return M, pivots


def rank(A: FFMatrix) -> int:
    """Rank over Z_q by Gauss-Jordan elimination."""
    if A.rows == 0 or A.cols == 0:
        return 0
    return len(row_reduce(A)[1])


def kernel_basis(A: FFMatrix) -> np.ndarray:
    """Rows form a basis of the null space of ``A`` over Z_q."""
    q = A.q
    R, pivots = row_reduce(A)
    free = [c for c in range(A.cols) if c not in pivots]
    basis = np.zeros((len(free), A.cols), dtype=np.int64)
    for b, f in enumerate(free):
        basis[b, f] = 1
        for r, pc in enumerate(pivots):
            basis[b, pc] = (-R[r, f]) % q
    return basis


# ---------------------------------------------------------------------------
# Chain complexes and Betti profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BettiProfile:
    """Homology dimensions by degree (degree 0 first) over Z_q."""

    dims: Tuple[int, ...]
    field: int = 2

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 0 for d in dims):
            raise ValueError("dimensions must be non-negative")
        while dims and dims[-1] == 0:
            dims = dims[:-1]
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "field", _check_prime(self.field))

    def __getitem__(self, k: int) -> int:
        return self.dims[k] if 0 <= k < len(self.dims) else 0

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    @property
    def total(self) -> int:
        return sum(self.dims)

    @property
    def euler(self) -> int:
        return sum((-1) ** k * d for k, d in enumerate(self.dims))

    def padded(self, length: int) -> List[int]:
        return [self[k] for k in range(length)]


class ChainComplex:
    """Graded Z_q-vector spaces with boundary maps ``d_k: C_k -> C_{k-1}``.

    ``dims`` maps degree to cell count; ``boundaries`` maps degree ``k`` to a
    ``dims[k-1] x dims[k]`` matrix.  Missing boundaries are zero.
    """

    def __init__(self, dims: Mapping[int, int], boundaries: Mapping[int, FFMatrix],
                 field: int = 2, names: Optional[Mapping[int, Sequence[str]]] = None,
                 check: bool = True):
        self.field = _check_prime(field)
        self.dims: Dict[int, int] = {int(k): int(v) for k, v in dims.items() if v}
        if any(k < 0 for k in self.dims):
            raise InvalidComplexError("negative degree")
        self.boundaries: Dict[int, FFMatrix] = {}
        for k in range(0, self.top + 2):
            shape = (self.dim(k - 1), self.dim(k))
            d = boundaries.get(k)
            if d is None:
                d = FFMatrix.zeros(*shape, q=self.field)
            if d.q != self.field:
                raise InvalidComplexError(f"boundary {k} is over Z_{d.q}, not Z_{self.field}")
            if d.shape != shape:
                raise InvalidComplexError(f"boundary {k} has shape {d.shape}, expected {shape}")
            self.boundaries[k] = d
        extra = set(boundaries) - set(range(0, self.top + 2))
        if any(not boundaries[k].is_zero() for k in extra):
            raise InvalidComplexError("boundary given in a degree without cells")
        self.names = {k: list(v) for k, v in (names or {}).items()}
        if check:
            self.validate()

    @property
    def top(self) -> int:
        return max(self.dims) if self.dims else -1

    def dim(self, k: int) -> int:
        return self.dims.get(k, 0)

    def boundary(self, k: int) -> FFMatrix:
        if k in self.boundaries:
            return self.boundaries[k]
        return FFMatrix.zeros(self.dim(k - 1), self.dim(k), q=self.field)

    def validate(self) -> None:
        for k in range(1, self.top + 1):
            comp = self.boundary(k) @ self.boundary(k + 1)
            if not comp.is_zero():
                raise InvalidComplexError(f"d_{k} o d_{k + 1} != 0")

    def cell_euler(self) -> int:
        return sum((-1) ** k * n for k, n in self.dims.items())

    def homology_dims(self) -> BettiProfile:
        return homology_dims(self)


def homology_dims(C: ChainComplex) -> BettiProfile:
    """``dim H_k = dim C_k - rank d_k - rank d_{k+1}`` in every degree."""
    C.validate()
    ranks = {k: rank(C.boundary(k)) for k in range(0, C.top + 2)}
    dims = [C.dim(k) - ranks[k] - ranks[k + 1] for k in range(0, C.top + 1)]
    return BettiProfile(tuple(dims), C.field)


# ---------------------------------------------------------------------------
# Counting bounds
# ---------------------------------------------------------------------------


def morse_lower_bound(B: BettiProfile, from_degree: int = 1) -> int:
    """Sum of relative Betti numbers from ``from_degree`` up."""
    return sum(B[k] for k in range(from_degree, len(B.dims)))


def _same_field(*profiles: BettiProfile) -> int:
    fields = {b.field for b in profiles}
    if len(fields) > 1:
        raise ValueError(f"profiles over different fields: {sorted(fields)}")
    return fields.pop()


def exact_sequence_bound(a: BettiProfile, b: BettiProfile) -> int:
    """Lower bound on the total of the third term of a long exact sequence.

    With ``... -> A_q -> B_q -> C_q -> A_{q-1} -> ...`` exact,
    ``sum dim C >= sum dim B - sum dim A``.
    """
    _same_field(a, b)
    return max(0, b.total - a.total)


def kunneth_dims(factors: Sequence[BettiProfile]) -> BettiProfile:
    """Betti numbers of a product: multiply the Poincare polynomials."""
    if not factors:
        raise ValueError("need at least one factor")
    q = _same_field(*factors)
    poly = np.array([1], dtype=object)
    for f in factors:
        poly = np.convolve(poly, np.array(f.dims or (0,), dtype=object))
    return BettiProfile(tuple(int(c) for c in poly), q)


def smith_bound(total: BettiProfile, fixed: BettiProfile) -> BettiProfile:
    """Per-degree lower bounds ``ceil((total_q - fixed_q) / q)``, floored at 0.

    ``total`` is the homology of a space with a Z_q action (q the field prime)
    and ``fixed`` the homology of its fixed set; the result bounds the
    homology of the orbit space relative to the fixed set.
    """
    q = _same_field(total, fixed)
    n = max(len(total.dims), len(fixed.dims))
    dims = [max(0, -((fixed[k] - total[k]) // q)) for k in range(n)]
    return BettiProfile(tuple(dims), q)


def cubic_bound(B: int) -> int:
    """``(B^3 - 3B^2 + 2B) / 6`` three-periodic trajectories for Betti sum ``B``."""
    if B < 0:
        raise ValueError("Betti sum must be non-negative")
    value = cubic_pipeline(B)
    assert value.denominator == 1
    return int(value)


def cubic_pipeline(B: int) -> Fraction:
    """The exact rational chain behind :func:`cubic_bound`.

    Smith step over the cube (total ``B^3``, fixed diagonal ``B``) gives
    ``(B^3 - B) / 3``; subtracting the pair term ``B^2 - B`` and halving for the
    cyclic quotient yields the bound.
    """
    smith = Fraction(B**3 - B, 3)
    pair = B**2 - B
    return (smith - pair) / 2


def pair_relative_dims(M: BettiProfile) -> BettiProfile:
    """Homology of ``(M x M, diagonal)``; the diagonal inclusion is injective."""
    square = kunneth_dims([M, M])
    n = len(square.dims)
    return BettiProfile(tuple(square[k] - M[k] for k in range(n)), M.field)


def smith_pipeline_bound(M: BettiProfile) -> int:
    """Integral version of the three-periodic bound from per-degree data.

    Applies the Smith estimate degree by degree with ceilings, subtracts the
    total of the pair ``(M x M, M)`` through the exact sequence of the triple,
    and halves (rounding up, counts being integers).
    """
    if M.field != 3:
        raise ValueError("the Smith estimate is taken over Z_3")
    relative = smith_bound(kunneth_dims([M, M, M]), M)
    c = exact_sequence_bound(pair_relative_dims(M), relative)
    return -(-c // 2)


# ---------------------------------------------------------------------------
# Plain-text chain complex format
# ---------------------------------------------------------------------------
#
#   field 2
#   degree 3: 2 cells
#   -
#   -
#   degree 4: 8 cells
#   0 1
#   ...
#
# After each header come one line per cell listing the faces of its boundary
# as indices into the previous degree ("i" or "i*c" for coefficient c); "-"
# marks an empty boundary.  Anything after '#' is a comment.


class ComplexFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def dumps_complex(C: ChainComplex) -> str:
    out = [f"field {C.field}"]
    for k in sorted(C.dims):
        names = C.names.get(k)
        out.append(f"degree {k}: {C.dim(k)} cells")
        d = C.boundary(k).data
        for j in range(C.dim(k)):
            terms = []
            for i in np.flatnonzero(d[:, j]):
                c = int(d[i, j])
                terms.append(str(i) if c == 1 else f"{i}*{c}")
            line = " ".join(terms) if terms else "-"
            if names:
                line += f"  # {names[j]}"
            out.append(line)
    return "\n".join(out) + "\n"


def loads_complex(text: str, check: bool = True) -> ChainComplex:
    field = 2
    dims: Dict[int, int] = {}
    columns: Dict[int, List[Dict[int, int]]] = {}
    names: Dict[int, List[str]] = {}
    current: Optional[int] = None
    expected = 0
    header_line = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        comment = raw.split("#", 1)[1].strip() if "#" in raw else ""
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("field"):
            if dims:
                raise ComplexFormatError(line_no, "field must precede the cells")
            try:
                field = _check_prime(int(line.split()[1]))
            except (IndexError, ValueError) as exc:
                raise ComplexFormatError(line_no, f"bad field line: {exc}") from None
            continue
        if line.startswith("degree"):
            if current is not None and len(columns[current]) != expected:
                raise ComplexFormatError(header_line, f"degree {current} lists {len(columns[current])} of {expected} cells")
            try:
                head, count = line[len("degree"):].split(":")
                k = int(head)
                n = int(count.split()[0])
            except ValueError:
                raise ComplexFormatError(line_no, "expected 'degree k: n cells'") from None
            if k in dims or k < 0 or n < 0:
                raise ComplexFormatError(line_no, f"bad or repeated degree {k}")
            dims[k], columns[k], names[k] = n, [], []
            current, expected, header_line = k, n, line_no
            continue
        if current is None:
            raise ComplexFormatError(line_no, "cell line before any degree header")
        if len(columns[current]) >= expected:
            raise ComplexFormatError(line_no, f"too many cells in degree {current}")
        col: Dict[int, int] = {}
        if line != "-":
            for tok in line.split():
                idx, _, coef = tok.partition("*")
                try:
                    i, c = int(idx), int(coef) if coef else 1
                except ValueError:
                    raise ComplexFormatError(line_no, f"bad face token {tok!r}") from None
                col[i] = col.get(i, 0) + c
        columns[current].append(col)
        names[current].append(comment)
    if current is not None and len(columns[current]) != expected:
        raise ComplexFormatError(header_line, f"degree {current} lists {len(columns[current])} of {expected} cells")
    boundaries = {}
    for k, cols in columns.items():
        rows = dims.get(k - 1, 0)
        for col in cols:
            bad = [i for i in col if not 0 <= i < rows]
            if bad:
                raise ComplexFormatError(0, f"degree {k} face index {bad[0]} out of range (degree {k - 1} has {rows} cells)")
        boundaries[k] = FFMatrix.from_columns(rows, cols, q=field)
    keep_names = {k: v for k, v in names.items() if any(v)}
    return ChainComplex(dims, boundaries, field=field, names=keep_names, check=check)
