"""Embedded manifolds given by charts.

Every manifold maps chart coordinates ``u`` (shape ``(..., m)``) to ambient
points (shape ``(..., n)``) and supplies an analytic tangent frame
(shape ``(..., m, n)``).  Curves use a single periodic angle chart; spheres and
their deformations use hyperspherical coordinates with ``n + 1`` charts that
differ by a cyclic relabeling of the ambient axes.
"""
from __future__ import annotations

import math
from typing import Any, Mapping, Optional, Sequence, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi

# sin^2 of the polar angle below which a sphere chart counts as "in the polar
# cap" (|cos theta| > 0.95) and the point should move to another chart
RECHART_THRESHOLD = 1.0 - 0.95**2
_SINGULAR_THRESHOLD = 1e-12


class DomainError(ValueError):
    """A non-periodic chart coordinate lies outside the chart box."""


class SingularChartError(ValueError):
    """The chart is degenerate at the requested point; use another chart."""


class ParametricManifold:
    """Base class for a closed manifold embedded in R^n through charts.

    Subclasses implement ``_embed``, ``_frame`` and ``locate``.  The public
    ``embed``/``tangent_frame`` methods add domain checking and wrapping.
    """

    kind = "abstract"
    intrinsic_dim: int
    ambient_dim: int
    n_charts: int = 1
    # per-axis period (None for a bounded axis) and closed bounds
    periods: Tuple[Optional[float], ...]
    bounds: Tuple[Tuple[float, float], ...]

    # -- to be provided by subclasses ------------------------------------
    def _embed(self, u: np.ndarray, chart: int) -> np.ndarray:
        raise NotImplementedError

    def _frame(self, u: np.ndarray, chart: int) -> np.ndarray:
        raise NotImplementedError

    def locate(self, x: np.ndarray) -> Tuple[int, np.ndarray]:
        """Best chart and chart coordinates for an ambient point on M."""
        raise NotImplementedError

    def chart_quality(self, u: np.ndarray, chart: int) -> np.ndarray:
        """Conditioning measure of the chart at ``u``; larger is better."""
        return np.ones(np.shape(u)[:-1])

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    # -- shared machinery -------------------------------------------------
    def wrap(self, u) -> np.ndarray:
        """Reduce periodic coordinates into ``[0, period)``."""
        u = np.array(u, dtype=float)
        for i, period in enumerate(self.periods):
            if period is not None:
                u[..., i] = np.mod(u[..., i], period)
        return u

    def _check_domain(self, u: np.ndarray) -> None:
        for i, (period, (lo, hi)) in enumerate(zip(self.periods, self.bounds)):
            if period is None:
                col = u[..., i]
                if np.any(col < lo) or np.any(col > hi):
                    raise DomainError(
                        f"coordinate {i} outside [{lo}, {hi}] for {self.kind}"
                    )

    def _check_chart(self, chart: int) -> None:
        if not 0 <= chart < self.n_charts:
            raise ValueError(f"{self.kind} has no chart {chart}")

    def embed(self, u, chart: int = 0) -> np.ndarray:
        self._check_chart(chart)
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.intrinsic_dim:
            raise ValueError(
                f"expected {self.intrinsic_dim} chart coordinates, got {u.shape[-1]}"
            )
        self._check_domain(u)
        return self._embed(self.wrap(u), chart)

    def tangent_frame(self, u, chart: int = 0) -> np.ndarray:
        self._check_chart(chart)
        u = np.asarray(u, dtype=float)
        self._check_domain(u)
        u = self.wrap(u)
        if np.any(self.chart_quality(u, chart) < _SINGULAR_THRESHOLD):
            raise SingularChartError(f"{self.kind} chart {chart} is singular here")
        return self._frame(u, chart)

    def needs_rechart(self, u: np.ndarray, chart: int) -> bool:
        return bool(np.any(self.chart_quality(u, chart) < RECHART_THRESHOLD))

    def sample(self, unit: np.ndarray) -> np.ndarray:
        """Map points of the unit cube ``[0,1)^m`` to chart-0 coordinates."""
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return lo + np.asarray(unit) * (hi - lo)

    def sort_key(self, x: np.ndarray) -> np.ndarray:
        """Chart-independent coordinates used to order configurations."""
        return np.asarray(x, dtype=float)

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


# ---------------------------------------------------------------------------
# Closed plane curves
# ---------------------------------------------------------------------------


class PlaneCurve(ParametricManifold):
    intrinsic_dim = 1
    ambient_dim = 2
    periods = (TWO_PI,)
    bounds = ((0.0, TWO_PI),)

    def sort_key(self, x: np.ndarray) -> np.ndarray:
        _, u = self.locate(x)
        return u

    def angle_of(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.mod(np.arctan2(x[..., 1], x[..., 0]), TWO_PI)

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        return 0, self.angle_of(x)[..., None]


class PerturbedCircle(PlaneCurve):
    """The curve ``r(phi) = 1 - epsilon * cos(harmonic * phi)`` in polar form."""

    kind = "perturbed_circle"

    def __init__(self, epsilon: float = 0.0, p: int = 3):
        if not 0.0 <= epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if p < 1:
            raise ValueError("harmonic must be positive")
        self.epsilon = float(epsilon)
        self.p = int(p)

    def params(self):
        return {"epsilon": self.epsilon, "p": self.p}

    def radius(self, phi):
        return 1.0 - self.epsilon * np.cos(self.p * phi)

    def _embed(self, u, chart):
        phi = u[..., 0]
        r = self.radius(phi)
        return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)

    def _frame(self, u, chart):
        phi = u[..., 0]
        r = self.radius(phi)
        dr = self.epsilon * self.p * np.sin(self.p * phi)
        c, s = np.cos(phi), np.sin(phi)
        t = np.stack([dr * c - r * s, dr * s + r * c], axis=-1)
        return t[..., None, :]

    @property
    def diameter(self):
        return 2.0 * (1.0 + self.epsilon)


class Circle(PerturbedCircle):
    kind = "circle"

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        super().__init__(0.0, 1)
        self.r = float(radius)

    def params(self):
        return {"radius": self.r}

    def radius(self, phi):
        return np.full(np.shape(phi), self.r)

    def _frame(self, u, chart):
        phi = u[..., 0]
        t = self.r * np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        return t[..., None, :]

    @property
    def diameter(self):
        return 2.0 * self.r


class Ellipse(PlaneCurve):
    kind = "ellipse"

    def __init__(self, a: float = 1.0, b: float = 1.0):
        if a <= 0 or b <= 0:
            raise ValueError("semi-axes must be positive")
        self.a, self.b = float(a), float(b)

    def params(self):
        return {"a": self.a, "b": self.b}

    def _embed(self, u, chart):
        t = u[..., 0]
        return np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)

    def _frame(self, u, chart):
        t = u[..., 0]
        v = np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)
        return v[..., None, :]

    def angle_of(self, x):
        x = np.asarray(x, dtype=float)
        return np.mod(np.arctan2(x[..., 1] / self.b, x[..., 0] / self.a), TWO_PI)

    @property
    def diameter(self):
        return 2.0 * max(self.a, self.b)


# ---------------------------------------------------------------------------
# Spheres in hyperspherical charts
# ---------------------------------------------------------------------------


def hyperspherical(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit vector for angles ``t`` (shape ``(..., n)``) and its Jacobian.

    ``h_0 = cos t_0``, ``h_k = sin t_0 ... sin t_{k-1} cos t_k`` and
    ``h_n = sin t_0 ... sin t_{n-1}``.  The Jacobian has shape ``(..., n, n+1)``
    with row ``i`` holding ``dh / dt_i``.
    """
    n = t.shape[-1]
    s, c = np.sin(t), np.cos(t)
    lead = t.shape[:-1]
    h = np.empty(lead + (n + 1,))
    jac = np.zeros(lead + (n, n + 1))
    ones = np.ones(lead)
    for k in range(n + 1):
        ck = c[..., k] if k < n else ones
        prod = ones.copy()
        for j in range(k):
            prod = prod * s[..., j]
        h[..., k] = prod * ck
        for i in range(k):
            # derivative of the sin-product with respect to t_i
            dprod = c[..., i].copy()
            for j in range(k):
                if j != i:
                    dprod = dprod * s[..., j]
            jac[..., i, k] = dprod * ck
        if k < n:
            jac[..., k, k] = -prod * s[..., k]
    return h, jac


def hyperspherical_angles(h: np.ndarray) -> np.ndarray:
    """Inverse of :func:`hyperspherical` for unit vectors ``h``."""
    n = h.shape[-1] - 1
    t = np.empty(h.shape[:-1] + (n,))
    for k in range(n - 1):
        tail = np.linalg.norm(h[..., k + 1:], axis=-1)
        t[..., k] = np.arctan2(tail, h[..., k])
    t[..., n - 1] = np.mod(np.arctan2(h[..., n], h[..., n - 1]), TWO_PI)
    return t


class SphereLike(ParametricManifold):
    """Shared chart logic for star-shaped deformations of the unit n-sphere.

    Chart ``k`` places hyperspherical component ``j`` on ambient axis
    ``(j + n + k) mod (n + 1)``; chart 0 is the usual polar/azimuth chart for
    the 2-sphere (``theta`` measured from the last axis).
    """

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError("sphere dimension must be at least 2")
        self.dim = int(dim)
        self.intrinsic_dim = self.dim
        self.ambient_dim = self.dim + 1
        self.n_charts = self.dim + 1
        self.periods = (None,) * (self.dim - 1) + (TWO_PI,)
        self.bounds = ((0.0, math.pi),) * (self.dim - 1) + ((0.0, TWO_PI),)
        n = self.dim
        self._perms = [
            np.array([(j + n + k) % (n + 1) for j in range(n + 1)])
            for k in range(n + 1)
        ]

    # shape map on the unit sphere, in ambient axis order
    def _shape(self, s: np.ndarray, ds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _unit_direction(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _to_ambient_order(self, h: np.ndarray, chart: int) -> np.ndarray:
        out = np.empty_like(h)
        out[..., self._perms[chart]] = h
        return out

    def _unit(self, u, chart):
        h, dh = hyperspherical(u)
        return self._to_ambient_order(h, chart), self._to_ambient_order(dh, chart)

    def _embed(self, u, chart):
        s, ds = self._unit(u, chart)
        return self._shape(s, ds)[0]

    def _frame(self, u, chart):
        s, ds = self._unit(u, chart)
        return self._shape(s, ds)[1]

    def chart_quality(self, u, chart):
        # h_{n-1}^2 + h_n^2 bounds every metric factor from below
        s = np.prod(np.sin(np.asarray(u)[..., : self.dim - 1]), axis=-1)
        return s**2

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("locate expects a single ambient point")
        s = self._unit_direction(x)
        best, best_q = 0, -1.0
        for k, perm in enumerate(self._perms):
            h = s[perm]
            q = h[-1] ** 2 + h[-2] ** 2
            if q > best_q + 1e-12:
                best, best_q = k, q
        return best, hyperspherical_angles(s[self._perms[best]])

    def locate_in(self, x, chart: int) -> np.ndarray:
        s = self._unit_direction(np.asarray(x, dtype=float))
        return hyperspherical_angles(s[..., self._perms[chart]])

    def sample(self, unit):
        # area-uniform on the round sphere for dim 2; box-uniform otherwise
        unit = np.asarray(unit, dtype=float)
        u = super().sample(unit)
        if self.dim == 2:
            u[..., 0] = np.arccos(1.0 - 2.0 * unit[..., 0])
        return u


class Ellipsoid(SphereLike):
    kind = "ellipsoid"

    def __init__(self, semi_axes: Sequence[float]):
        axes = np.asarray(semi_axes, dtype=float)
        if axes.ndim != 1 or len(axes) < 3:
            raise ValueError("need at least three semi-axes")
        if np.any(axes <= 0):
            raise ValueError("semi-axes must be positive")
        super().__init__(len(axes) - 1)
        self.semi_axes = axes

    def params(self):
        return {"semi_axes": [float(a) for a in self.semi_axes]}

    def _shape(self, s, ds):
        return self.semi_axes * s, self.semi_axes * ds

    def _unit_direction(self, x):
        y = x / self.semi_axes
        return y / np.linalg.norm(y, axis=-1, keepdims=True)

    @property
    def diameter(self):
        return 2.0 * float(np.max(self.semi_axes))


class Sphere(Ellipsoid):
    kind = "sphere"

    def __init__(self, dim: int = 2, radius: float = 1.0):
        super().__init__([radius] * (dim + 1))
        self.radius = float(radius)

    def params(self):
        return {"dim": self.dim, "radius": self.radius}


class PerturbedSphere(SphereLike):
    """Radial deformation ``x = (1 + epsilon * w(s)) s`` of the unit sphere.

    ``w(s) = sum_j (j+1)/(n+1) s_j^2 + s_0 s_1 s_2`` is fixed; its quadratic
    part breaks the rotational symmetry and the cubic part the central one.
    """

    kind = "perturbed_sphere"

    def __init__(self, dim: int = 2, epsilon: float = 0.05):
        super().__init__(dim)
        if abs(epsilon) >= 0.5:
            raise ValueError("|epsilon| must be below 0.5")
        self.epsilon = float(epsilon)
        self._weights = np.arange(1, self.dim + 2) / (self.dim + 1)

    def params(self):
        return {"dim": self.dim, "epsilon": self.epsilon}

    def harmonic(self, s):
        return np.sum(self._weights * s**2, axis=-1) + s[..., 0] * s[..., 1] * s[..., 2]

    def _harmonic_grad(self, s):
        g = 2.0 * self._weights * s
        g[..., 0] += s[..., 1] * s[..., 2]
        g[..., 1] += s[..., 0] * s[..., 2]
        g[..., 2] += s[..., 0] * s[..., 1]
        return g

    def _shape(self, s, ds):
        r = 1.0 + self.epsilon * self.harmonic(s)
        dr = self.epsilon * np.einsum("...ij,...j->...i", ds, self._harmonic_grad(s))
        x = r[..., None] * s
        frame = r[..., None, None] * ds + dr[..., :, None] * s[..., None, :]
        return x, frame

    def _unit_direction(self, x):
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    @property
    def diameter(self):
        return 2.0 * (1.0 + 1.2 * abs(self.epsilon))


# ---------------------------------------------------------------------------

KINDS = {
    "circle": Circle,
    "perturbed_circle": PerturbedCircle,
    "ellipse": Ellipse,
    "sphere": Sphere,
    "ellipsoid": Ellipsoid,
    "perturbed_sphere": PerturbedSphere,
}


def from_spec(spec: Mapping[str, Any]) -> ParametricManifold:
    """Build a manifold from ``{"kind": ..., **params}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in KINDS:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {sorted(KINDS)}")
    try:
        return KINDS[kind](**spec)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind}: {exc}") from None


def to_spec(manifold: ParametricManifold) -> dict:
    return {"kind": manifold.kind, **manifold.params()}
