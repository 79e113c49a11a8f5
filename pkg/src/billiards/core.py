"""Length functional of closed inscribed polygons and its critical points.

A configuration is an ordered cyclic tuple of ``p`` points on a manifold.  The
length functional sums the chordal edge lengths; its critical points off the
diagonal are exactly the ``p``-periodic billiard trajectories.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .manifold import TWO_PI, ParametricManifold

HESSIAN_STEP = 1e-4
RELATIVE_DEGENERACY = 1e-6
ORBIT_TOL = 1e-7


class DiagonalError(ValueError):
    """Two consecutive vertices coincide; the length functional is not smooth."""


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


def evaluate_points(manifold: ParametricManifold, coords: np.ndarray, charts: Sequence[int],
                    frames: bool = True):
    """Embed (and optionally frame) a batch of configurations.

    ``coords`` has shape ``(..., p, m)``; ``charts[i]`` is the chart of vertex
    ``i`` shared by the whole batch.  Returns ``X`` of shape ``(..., p, n)`` and
    ``F`` of shape ``(..., p, m, n)`` (or ``None``).
    """
    coords = np.asarray(coords, dtype=float)
    charts = np.asarray(charts)
    lead = coords.shape[:-1]
    X = np.empty(lead + (manifold.ambient_dim,))
    F = np.empty(lead + (manifold.intrinsic_dim, manifold.ambient_dim)) if frames else None
    for chart in np.unique(charts):
        idx = np.flatnonzero(charts == chart)
        u = coords[..., idx, :]
        X[..., idx, :] = manifold._embed(u, int(chart))
        if frames:
            F[..., idx, :, :] = manifold._frame(u, int(chart))
    return X, F


@dataclass(frozen=True, eq=False)
class Configuration:
    """``p`` chart points on a manifold with their cached ambient images."""

    manifold: ParametricManifold
    coords: np.ndarray
    charts: Tuple[int, ...]
    ambient: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = self.manifold.wrap(np.atleast_2d(np.asarray(self.coords, dtype=float)))
        if coords.shape[-1] != self.manifold.intrinsic_dim:
            raise ValueError("chart coordinates have the wrong dimension")
        charts = tuple(int(c) for c in self.charts)
        if len(charts) != len(coords):
            raise ValueError("one chart index per vertex is required")
        if len(coords) < 2:
            raise ValueError("a configuration needs at least two vertices")
        coords.setflags(write=False)
        X, _ = evaluate_points(self.manifold, coords, charts, frames=False)
        X.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "ambient", X)

    @classmethod
    def from_coords(cls, manifold, coords, charts=None) -> "Configuration":
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if manifold.intrinsic_dim == 1 and coords.shape[0] == 1 and coords.shape[1] > 1:
            coords = coords.T
        if charts is None:
            charts = (0,) * len(coords)
        return cls(manifold, coords, tuple(charts))

    @classmethod
    def from_ambient(cls, manifold, points) -> "Configuration":
        charts, coords = [], []
        for x in np.asarray(points, dtype=float):
            chart, u = manifold.locate(x)
            charts.append(chart)
            coords.append(u)
        return cls(manifold, np.array(coords), tuple(charts))

    @property
    def p(self) -> int:
        return len(self.charts)

    def permuted(self, perm: Sequence[int]) -> "Configuration":
        perm = np.asarray(perm)
        return Configuration(self.manifold, self.coords[perm], tuple(np.asarray(self.charts)[perm]))

    def recharted(self) -> "Configuration":
        """Move every vertex to its best-conditioned chart."""
        return Configuration.from_ambient(self.manifold, self.ambient)

    def frames(self) -> np.ndarray:
        _, F = evaluate_points(self.manifold, self.coords, self.charts)
        return F


# ---------------------------------------------------------------------------
# Dihedral symmetry
# ---------------------------------------------------------------------------


class DihedralAction:
    """The dihedral group acting on cyclic ``p``-tuples by relabeling.

    Elements are index permutations ``pi`` with ``(g.c)_i = c_{pi(i)}``; the
    maps ``i -> +-i + k (mod p)``.  For ``p = 2`` the shift and the reversal
    coincide, so only two distinct permutations remain.
    """

    def __init__(self, p: int):
        if p < 2:
            raise ValueError("p must be at least 2")
        self.p = p
        idx = np.arange(p)
        elems = []
        for sign in (1, -1):
            for k in range(p):
                perm = tuple(int(v) for v in (sign * idx + k) % p)
                if perm not in elems:
                    elems.append(perm)
        self.elements: Tuple[Tuple[int, ...], ...] = tuple(elems)

    @property
    def identity(self) -> Tuple[int, ...]:
        return tuple(range(self.p))

    @property
    def shift(self) -> Tuple[int, ...]:
        return tuple((i + 1) % self.p for i in range(self.p))

    @property
    def reversal(self) -> Tuple[int, ...]:
        return tuple(self.p - 1 - i for i in range(self.p))

    @staticmethod
    def compose(g, h) -> Tuple[int, ...]:
        """The element acting as ``g`` after ``h``: ``(g.(h.c))``."""
        return tuple(h[g[i]] for i in range(len(g)))

    @staticmethod
    def inverse(g) -> Tuple[int, ...]:
        inv = [0] * len(g)
        for i, gi in enumerate(g):
            inv[gi] = i
        return tuple(inv)

    def apply(self, g, seq):
        return [seq[g[i]] for i in range(self.p)]

    def orbit(self, c: Configuration):
        return [c.permuted(g) for g in self.elements]


@functools.lru_cache(maxsize=None)
def dihedral(p: int) -> DihedralAction:
    return DihedralAction(p)


# ---------------------------------------------------------------------------
# The length functional and its derivatives
# ---------------------------------------------------------------------------


def _edges(X: np.ndarray):
    E = np.roll(X, -1, axis=-2) - X  # E_i = x_{i+1} - x_i
    L = np.linalg.norm(E, axis=-1)
    return E, L


def length(c: Configuration) -> float:
    """Perimeter of the closed polygon through the configuration."""
    return float(_edges(c.ambient)[1].sum())


def gaps(c: Configuration) -> np.ndarray:
    return _edges(c.ambient)[1]


def _ambient_gradient(X: np.ndarray, diagonal_tol: float = 0.0) -> np.ndarray:
    E, L = _edges(X)
    if np.any(L <= diagonal_tol):
        raise DiagonalError("consecutive vertices coincide")
    U = E / L[..., None]
    # df/dx_i = (x_i - x_{i+1})/|.| + (x_i - x_{i-1})/|.|
    return np.roll(U, 1, axis=-2) - U


def ambient_gradient(c: Configuration) -> np.ndarray:
    """Gradient of the length with respect to each ambient vertex, ``(p, n)``."""
    return _ambient_gradient(c.ambient)


def chart_gradient(c: Configuration) -> np.ndarray:
    """Derivative of the length in chart coordinates, shape ``(p, m)``."""
    X, F = evaluate_points(c.manifold, c.coords, c.charts)
    return np.einsum("pmn,pn->pm", F, _ambient_gradient(X))


def _batch_chart_gradient(manifold, coords, charts, diagonal_tol=0.0):
    X, F = evaluate_points(manifold, coords, charts)
    return np.einsum("...mn,...n->...m", F, _ambient_gradient(X, diagonal_tol))


def _tangential_components(F: np.ndarray, G: np.ndarray) -> np.ndarray:
    # orthonormalize each vertex frame; rows of F span T_x M
    Q, _ = np.linalg.qr(np.swapaxes(F, -1, -2))
    return np.einsum("...nm,...n->...m", Q, G)


def billiard_residual(c: Configuration) -> float:
    """Norm of the tangential part of the length gradient over all vertices."""
    X, F = evaluate_points(c.manifold, c.coords, c.charts)
    return float(np.linalg.norm(_tangential_components(F, _ambient_gradient(X))))


def tangential_hessian(c: Configuration, step: float = HESSIAN_STEP) -> np.ndarray:
    """Chart-coordinate Hessian by central differences of the analytic gradient."""
    p, m = c.coords.shape
    dim = p * m
    base = c.coords.reshape(dim)
    shifts = step * np.eye(dim)
    pts = np.concatenate([base + shifts, base - shifts]).reshape(2 * dim, p, m)
    G = _batch_chart_gradient(c.manifold, pts, c.charts).reshape(2, dim, dim)
    H = (G[0] - G[1]).T / (2.0 * step)
    return 0.5 * (H + H.T)


def morse_index(H: np.ndarray, degeneracy_tol: Optional[float] = None) -> Tuple[int, int]:
    """Negative-eigenvalue count and kernel dimension of a symmetric matrix.

    Without an explicit tolerance, eigenvalues within ``1e-6`` of the largest
    magnitude count as zero.
    """
    lam = np.linalg.eigvalsh(np.asarray(H, dtype=float))
    if degeneracy_tol is None:
        scale = float(np.max(np.abs(lam))) if lam.size else 0.0
        degeneracy_tol = RELATIVE_DEGENERACY * scale
    index = int(np.sum(lam < -degeneracy_tol))
    null = int(np.sum(np.abs(lam) <= degeneracy_tol))
    return index, null


# ---------------------------------------------------------------------------
# Smoothed functional
# ---------------------------------------------------------------------------


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _dpsi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


@dataclass(frozen=True)
class SmoothingParams:
    """Width of the collar and the C-infinity step that vanishes on it."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("smoothing width must be positive")

    def bump(self, t):
        s = np.asarray(t, dtype=float) / self.epsilon
        a, b = _psi(s), _psi(1.0 - s)
        return a / (a + b)

    def bump_derivative(self, t):
        s = np.asarray(t, dtype=float) / self.epsilon
        a, b = _psi(s), _psi(1.0 - s)
        da, db = _dpsi(s), -_dpsi(1.0 - s)
        return (da * b - a * db) / (a + b) ** 2 / self.epsilon


def _smoothed(X, s: SmoothingParams):
    _, L = _edges(X)
    return L.sum(axis=-1) * np.prod(s.bump(L), axis=-1)


def smoothed_length(c: Configuration, s: SmoothingParams) -> float:
    """Length times the product of bump factors of every edge."""
    return float(_smoothed(c.ambient, s))


def smoothed_gradient(c: Configuration, s: SmoothingParams) -> np.ndarray:
    """Ambient gradient of :func:`smoothed_length` (off the diagonal)."""
    X = c.ambient
    E, L = _edges(X)
    if np.any(L <= 0):
        raise DiagonalError("consecutive vertices coincide")
    U = E / L[:, None]
    phi, dphi = s.bump(L), s.bump_derivative(L)
    f = L.sum()
    P = np.prod(phi)
    # d/dL_j of prod(phi) without dividing by a possibly vanishing factor
    dP = np.array([dphi[j] * np.prod(np.delete(phi, j)) for j in range(len(L))])
    dg_dL = P + f * dP
    # dL_j/dx_i: -U_j for i = j, +U_j for i = j + 1
    return np.roll(dg_dL[:, None] * U, 1, axis=0) - dg_dL[:, None] * U


# ---------------------------------------------------------------------------
# Orbits and winding
# ---------------------------------------------------------------------------


def _vertex_keys(c: Configuration) -> np.ndarray:
    return np.array([np.atleast_1d(c.manifold.sort_key(x)) for x in c.ambient])


def _tol_less(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    for x, y in zip(a.ravel(), b.ravel()):
        if abs(x - y) > tol:
            return x < y
    return False


def canonical_orbit_representative(c: Configuration, D: Optional[DihedralAction] = None,
                                   tol: float = ORBIT_TOL) -> Configuration:
    """Lexicographically smallest relabeling of ``c`` under the dihedral group.

    Vertices are compared by chart-independent keys (the wrapped angle on a
    curve, the ambient point otherwise).  Candidates are scanned in exact
    lexicographic order so the answer depends only on the orbit.
    """
    D = D or dihedral(c.p)
    keys = _vertex_keys(c)
    cands = [(keys[list(g)], g) for g in D.elements]
    cands.sort(key=lambda kg: tuple(kg[0].ravel()))
    best_key, best_g = cands[0]
    for key, g in cands[1:]:
        if _tol_less(key, best_key, tol):
            best_key, best_g = key, g
    return c.permuted(best_g)


def orbit_distance(a: Configuration, b: Configuration) -> float:
    """Smallest max-vertex ambient distance between ``b`` and relabelings of ``a``."""
    D = dihedral(a.p)
    best = math.inf
    for g in D.elements:
        d = float(np.max(np.linalg.norm(a.ambient[list(g)] - b.ambient, axis=-1)))
        best = min(best, d)
    return best


def aligned_to(a: Configuration, b: Configuration) -> Configuration:
    """The relabeling of ``a`` closest to ``b``."""
    D = dihedral(a.p)
    dists = [float(np.max(np.linalg.norm(a.ambient[list(g)] - b.ambient, axis=-1)))
             for g in D.elements]
    return a.permuted(D.elements[int(np.argmin(dists))])


def rotation_number(c: Configuration) -> int:
    """Winding of a polygon inscribed in a closed curve, in ``1..(p-1)/2``."""
    if c.manifold.intrinsic_dim != 1:
        raise ValueError("rotation number is defined for curves only")
    phi = c.coords[:, 0]
    steps = np.mod(np.roll(phi, -1) - phi + math.pi, TWO_PI) - math.pi
    winding = int(round(abs(steps.sum()) / TWO_PI))
    winding = min(winding, c.p - winding)
    if winding == 0:
        raise ValueError("polygon does not wind around the curve")
    return winding


# ---------------------------------------------------------------------------


@dataclass
class CriticalPointReport:
    """A refined critical configuration and its second-order data."""

    config: Configuration
    length: float
    residual_norm: float
    morse_index: Optional[int]
    null_dim: int
    rotation_number: Optional[int] = None
    converged: bool = True
    iterations: int = 0
    flag: str = ""

    @property
    def degenerate(self) -> bool:
        return self.null_dim > 0

    @property
    def index_label(self):
        return "degenerate" if self.degenerate else self.morse_index


def critical_point_report(c: Configuration, residual: Optional[float] = None,
                          **extra) -> CriticalPointReport:
    H = tangential_hessian(c)
    index, null = morse_index(H)
    rot = None
    if c.manifold.intrinsic_dim == 1:
        try:
            rot = rotation_number(c)
        except ValueError:
            rot = None
    return CriticalPointReport(
        config=c,
        length=length(c),
        residual_norm=billiard_residual(c) if residual is None else residual,
        morse_index=index,
        null_dim=null,
        rotation_number=rot,
        **extra,
    )
