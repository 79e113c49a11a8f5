"""Multistart discovery of periodic billiard trajectories.

Starts come from a scrambled Sobol sequence over the product of chart boxes.
Each start is driven to a zero of the chart gradient of the length by damped
Newton iterations (the length has saddles, so plain ascent or descent would
miss them).  Converged configurations are deduplicated modulo the dihedral
group, and degenerate orbits are chained into critical manifolds.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.stats import qmc

from .core import (
    RELATIVE_DEGENERACY,
    Configuration,
    CriticalPointReport,
    DiagonalError,
    _edges,
    _tangential_components,
    _ambient_gradient,
    aligned_to,
    canonical_orbit_representative,
    critical_point_report,
    dihedral,
    evaluate_points,
    tangential_hessian,
)
from .manifold import ParametricManifold

log = logging.getLogger(__name__)


@dataclass
class SearchConfig:
    p: int = 3
    starts: int = 500
    seed: int = 0
    descent_tol: float = 1e-4
    newton_tol: float = 1e-10
    # None means 1e-3 times the manifold diameter
    diagonal_tolerance: Optional[float] = None
    max_iters: int = 100
    dedup_tol: float = 1e-5
    # None means 1e-2 times the manifold diameter
    family_tol: Optional[float] = None
    family_steps: int = 50
    family_samples: int = 100
    trust_radius: float = 0.5
    free_iters: int = 30
    max_stalls: int = 20

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if self.starts < 0 or self.max_iters < 1:
            raise ValueError("starts must be >= 0 and max_iters >= 1")
        for name in ("descent_tol", "newton_tol", "dedup_tol", "trust_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("diagonal_tolerance", "family_tol"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive")
        if not self.newton_tol < self.descent_tol:
            raise ValueError("newton_tol must be smaller than descent_tol")
        if not self.dedup_tol > self.newton_tol:
            raise ValueError("dedup_tol must exceed newton_tol")

    def resolved(self, manifold: ParametricManifold) -> "SearchConfig":
        """Copy with the diameter-relative defaults filled in."""
        out = SearchConfig(**self.__dict__)
        if out.diagonal_tolerance is None:
            out.diagonal_tolerance = 1e-3 * manifold.diameter
        if out.family_tol is None:
            out.family_tol = 1e-2 * manifold.diameter
        return out


@dataclass
class Family:
    """A connected set of degenerate critical orbits (a critical manifold)."""

    members: List[CriticalPointReport]
    samples: List[Configuration] = field(default_factory=list)
    sample_residuals: List[float] = field(default_factory=list)

    @property
    def representative(self) -> CriticalPointReport:
        return self.members[0]

    @property
    def null_dim(self) -> int:
        return self.representative.null_dim

    @property
    def length(self) -> float:
        return self.representative.length

    @property
    def rotation_number(self) -> Optional[int]:
        return self.representative.rotation_number


@dataclass
class SearchReport:
    trajectories: List[CriticalPointReport]
    families: List[Family]
    rejected_diagonal: int = 0
    starts_converged: int = 0
    starts_total: int = 0
    not_converged: int = 0
    diagnostics: List[str] = field(default_factory=list)

    @property
    def isolated_count(self) -> int:
        return len(self.trajectories)


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


class _State:
    """Raw-array view of a configuration used inside the Newton loop."""

    def __init__(self, manifold, coords, charts):
        self.manifold = manifold
        self.coords = np.array(coords, dtype=float)
        self.charts = np.array(charts, dtype=int)

    def evaluate(self, diagonal_tol):
        X, F = evaluate_points(self.manifold, self.coords, self.charts)
        _, L = _edges(X)
        if np.any(L <= diagonal_tol):
            raise DiagonalError("configuration entered the diagonal collar")
        grad = _ambient_gradient(X)
        G = np.einsum("pmn,pn->pm", F, grad).ravel()
        r = float(np.linalg.norm(_tangential_components(F, grad)))
        return G, r

    def moved(self, step):
        new = _State(self.manifold, self.coords + step.reshape(self.coords.shape), self.charts)
        new.normalize()
        return new

    def normalize(self):
        """Wrap periodic axes and re-chart vertices that left a good chart."""
        M = self.manifold
        if M.n_charts == 1:
            self.coords = M.wrap(self.coords)
            return
        lo = np.array([b[0] for b in M.bounds])
        hi = np.array([b[1] for b in M.bounds])
        bounded = np.array([per is None for per in M.periods])
        for i in range(len(self.coords)):
            u, chart = self.coords[i], int(self.charts[i])
            outside = np.any(bounded & ((u < lo) | (u > hi)))
            if outside or M.needs_rechart(u, chart):
                x = M._embed(u, chart)
                chart, u = M.locate(x)
                self.coords[i], self.charts[i] = u, chart
        self.coords = M.wrap(self.coords)

    def hessian(self):
        c = self.config()
        return tangential_hessian(c)

    def config(self):
        return Configuration(self.manifold, self.coords, tuple(int(c) for c in self.charts))


def _truncated_solve(H, G, rel=1e-7):
    lam, V = np.linalg.eigh(H)
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    if scale == 0.0:
        return np.zeros_like(G), False
    keep = np.abs(lam) > rel * scale
    coef = (V.T @ G)[keep] / lam[keep]
    return -(V[:, keep] @ coef), bool(np.all(keep))


def _refine_state(state: _State, cfg: SearchConfig, max_iters=None):
    """Drive ``state`` to a critical point; returns (state, residual, iters, flag).

    The first ``free_iters`` iterations take trust-capped Newton steps without
    a merit test; after that a step must reduce the residual unless the
    residual is already below ``descent_tol``.  Newton directions come first,
    then the gradient of the squared residual; if both fail the capped Newton
    step is taken anyway, at most ``max_stalls`` times.
    """
    diag = cfg.diagonal_tolerance
    max_iters = cfg.max_iters if max_iters is None else max_iters
    try:
        G, r = state.evaluate(diag)
    except DiagonalError:
        return state, math.inf, 0, "diagonal"
    stalls = 0
    for it in range(max_iters):
        if r < cfg.newton_tol:
            return state, r, it, "ok"
        H = state.hessian()
        step, _ = _truncated_solve(H, G)
        norm = float(np.linalg.norm(step))
        capped = step * min(1.0, cfg.trust_radius / norm) if norm > 0 else step
        directions = [] if it < cfg.free_iters else [capped] if norm <= cfg.trust_radius else []
        if it >= cfg.free_iters:
            gdir = -(H @ G)
            gnorm = float(np.linalg.norm(gdir))
            if gnorm > 0:
                directions.append(gdir * min(1.0, cfg.trust_radius / gnorm))
        accepted = False
        for d in directions:
            t = 1.0
            for _ in range(30):
                trial = state.moved(t * d)
                try:
                    G_new, r_new = trial.evaluate(diag)
                except DiagonalError:
                    return trial, math.inf, it + 1, "diagonal"
                if r_new < r or (r < cfg.descent_tol and r_new < 2.0 * r):
                    state, G, r = trial, G_new, r_new
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if accepted:
            continue
        if it >= cfg.free_iters:
            stalls += 1
            if stalls > cfg.max_stalls or norm == 0:
                return state, r, it + 1, "stalled"
        trial = state.moved(capped)
        try:
            G, r = trial.evaluate(diag)
        except DiagonalError:
            return trial, math.inf, it + 1, "diagonal"
        state = trial
    flag = "ok" if r < cfg.newton_tol else "max_iters"
    return state, r, max_iters, flag


def refine(c: Configuration, cfg: SearchConfig) -> CriticalPointReport:
    """Newton-correct ``c`` to a billiard trajectory.

    The report's ``flag`` is ``"ok"`` on convergence, ``"diagonal"`` when the
    iterate (or the start) lies within the diagonal collar, and ``"stalled"`` or
    ``"max_iters"`` otherwise.
    """
    cfg = cfg.resolved(c.manifold)
    state = _State(c.manifold, c.coords, c.charts)
    state.normalize()
    state, r, iters, flag = _refine_state(state, cfg)
    out = state.config()
    if flag == "diagonal":
        return CriticalPointReport(out, math.nan, math.inf, None, 0,
                                   converged=False, iterations=iters, flag=flag)
    if flag != "ok":
        return CriticalPointReport(out, math.nan, r, None, 0,
                                   converged=False, iterations=iters, flag=flag)
    return critical_point_report(out, residual=r, iterations=iters, flag=flag)


# ---------------------------------------------------------------------------
# Multistart driver
# ---------------------------------------------------------------------------


def initial_configurations(manifold: ParametricManifold, cfg: SearchConfig) -> List[Configuration]:
    """Low-discrepancy starts with vertices in their best charts."""
    cfg = cfg.resolved(manifold)
    m, p = manifold.intrinsic_dim, cfg.p
    if cfg.starts == 0:
        return []
    sampler = qmc.Sobol(d=p * m, scramble=True, seed=cfg.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non power-of-two sizes
        unit = sampler.random(cfg.starts)
    starts = []
    for row in unit.reshape(cfg.starts, p, m):
        coords = manifold.sample(row)
        c = Configuration(manifold, coords, (0,) * p)
        if manifold.n_charts > 1:
            c = c.recharted()
        if np.min(_edges(c.ambient)[1]) < 2.0 * cfg.diagonal_tolerance:
            continue
        starts.append(c)
    return starts


def _perm_stack(c: Configuration) -> np.ndarray:
    return np.stack([c.ambient[list(g)] for g in dihedral(c.p).elements])


def deduplicate(reports: List[CriticalPointReport], tol: float) -> List[CriticalPointReport]:
    """One report per dihedral orbit, in deterministic (length, key) order."""
    reps = []
    for rep in reports:
        rep.config = canonical_orbit_representative(rep.config)
    ordered = sorted(reports, key=lambda r: (round(r.length, 9), tuple(np.round(r.config.ambient.ravel(), 6))))
    stored = []
    for rep in ordered:
        if stored:
            perms = _perm_stack(rep.config)  # (2p, p, n)
            A = np.asarray(stored)  # (N, p, n)
            d = np.max(np.linalg.norm(A[:, None] - perms[None], axis=-1), axis=-1).min(axis=1)
            if np.min(d) <= tol:
                continue
        stored.append(rep.config.ambient)
        reps.append(rep)
    return reps


def find_trajectories(manifold: ParametricManifold, cfg: SearchConfig) -> SearchReport:
    """Find and classify ``p``-periodic billiard trajectories on ``manifold``."""
    cfg = cfg.resolved(manifold)
    starts = initial_configurations(manifold, cfg)
    converged, rejected, failed = [], cfg.starts - len(starts), 0
    for c in starts:
        rep = refine(c, cfg)
        if rep.flag == "ok":
            if np.min(_edges(rep.config.ambient)[1]) < cfg.diagonal_tolerance:
                rejected += 1
                continue
            converged.append(rep)
        elif rep.flag == "diagonal":
            rejected += 1
        else:
            failed += 1
    orbits = deduplicate(converged, cfg.dedup_tol)
    report = classify_family(orbits, cfg, manifold)
    report.rejected_diagonal = rejected
    report.starts_converged = len(converged)
    report.starts_total = cfg.starts
    report.not_converged = failed
    if not converged:
        report.diagnostics.append("no start converged")
    log.info("%s p=%d: %d starts, %d converged, %d isolated orbits, %d families",
             manifold, cfg.p, cfg.starts, len(converged), report.isolated_count,
             len(report.families))
    return report


# ---------------------------------------------------------------------------
# Critical manifolds
# ---------------------------------------------------------------------------


def _null_basis(H):
    lam, V = np.linalg.eigh(H)
    scale = np.max(np.abs(lam))
    return V[:, np.abs(lam) <= RELATIVE_DEGENERACY * scale]


def _correct(c: Configuration, cfg: SearchConfig):
    state = _State(c.manifold, c.coords, c.charts)
    state.normalize()
    state, r, _, flag = _refine_state(state, cfg, max_iters=25)
    return (state.config(), r) if flag == "ok" else (None, r)


def _chart_displacement(c: Configuration, delta: np.ndarray) -> np.ndarray:
    F = c.frames()  # (p, m, n)
    return np.stack([np.linalg.lstsq(F[i].T, delta[i], rcond=None)[0] for i in range(c.p)])


def _ambient_size(c: Configuration, d: np.ndarray) -> float:
    F = c.frames()
    return float(np.max(np.linalg.norm(np.einsum("pmn,pm->pn", F, d), axis=-1)))


def _family_step(c: Configuration, direction: np.ndarray, cfg: SearchConfig):
    """Move ``c`` by ``family_tol`` (ambient, max-vertex) along ``direction``."""
    size = _ambient_size(c, direction.reshape(c.coords.shape))
    if size == 0:
        return None, math.inf
    step = (cfg.family_tol / size) * direction
    moved = Configuration(c.manifold, c.coords + step.reshape(c.coords.shape), c.charts)
    return _correct(moved, cfg)


def connect(a: Configuration, b: Configuration, cfg: SearchConfig) -> bool:
    """Whether ``b`` is reachable from ``a`` along critical points.

    Walks at most ``family_steps`` corrected steps of size ``family_tol``,
    each projected onto the Hessian kernel of the current point.
    """
    cur = a
    for _ in range(cfg.family_steps + 1):
        tgt = aligned_to(b, cur)
        delta = tgt.ambient - cur.ambient
        dist = float(np.max(np.linalg.norm(delta, axis=-1)))
        if dist <= cfg.family_tol:
            return True
        N = _null_basis(tangential_hessian(cur))
        if N.shape[1] == 0:
            return False
        d = _chart_displacement(cur, delta).ravel()
        d_null = N @ (N.T @ d)
        size = _ambient_size(cur, d_null.reshape(cur.coords.shape))
        if size < 1e-3 * dist:
            return False
        if size <= cfg.family_tol:
            moved = Configuration(cur.manifold, cur.coords + d_null.reshape(cur.coords.shape), cur.charts)
            nxt, _ = _correct(moved, cfg)
        else:
            nxt, _ = _family_step(cur, d_null, cfg)
        if nxt is None:
            return False
        cur = nxt.recharted() if nxt.manifold.n_charts > 1 else nxt
    return False


def sample_family(c: Configuration, cfg: SearchConfig, count: int):
    """``count`` corrected configurations walked from ``c`` along its kernel."""
    samples, residuals = [c], []
    from .core import billiard_residual

    residuals.append(billiard_residual(c))
    prev = None
    cur = c
    while len(samples) < count:
        N = _null_basis(tangential_hessian(cur))
        if N.shape[1] == 0:
            break
        v = N[:, 0]
        if prev is not None:
            # keep walking the same way; project the previous direction
            proj = N @ (N.T @ prev)
            if np.linalg.norm(proj) > 1e-12:
                v = proj / np.linalg.norm(proj)
        nxt, r = _family_step(cur, v, cfg)
        if nxt is None:
            break
        if nxt.manifold.n_charts > 1:
            nxt = nxt.recharted()
            prev = None
        else:
            prev = v
        samples.append(nxt)
        residuals.append(r)
        cur = nxt
    return samples, residuals


# failed path attempts tolerated between the same two components
_MAX_LINK_FAILURES = 3


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def classify_family(reports: List[CriticalPointReport], cfg: SearchConfig,
                    manifold: Optional[ParametricManifold] = None) -> SearchReport:
    """Split orbits into isolated trajectories and chained critical manifolds."""
    if manifold is not None:
        cfg = cfg.resolved(manifold)
    elif reports:
        cfg = cfg.resolved(reports[0].config.manifold)
    isolated = [r for r in reports if r.null_dim == 0]
    degenerate = [r for r in reports if r.null_dim > 0]
    families: List[Family] = []
    if degenerate:
        n = len(degenerate)
        A = np.stack([r.config.ambient for r in degenerate])
        perms = np.stack([_perm_stack(r.config) for r in degenerate])  # (n, 2p, p, dim)
        dist = np.empty((n, n))
        for i in range(n):
            d = np.linalg.norm(perms[i][None] - A[:, None], axis=-1).max(axis=-1)
            dist[i] = d.min(axis=1)
        reach = cfg.family_steps * cfg.family_tol
        uf = _UnionFind(n)
        pairs = [(dist[i, j], i, j) for i in range(n) for j in range(i + 1, n) if dist[i, j] <= reach]
        pairs.sort()
        failures = {}
        for _, i, j in pairs:
            ri, rj = uf.find(i), uf.find(j)
            if ri == rj or degenerate[i].null_dim != degenerate[j].null_dim:
                continue
            key = (min(ri, rj), max(ri, rj))
            if failures.get(key, 0) >= _MAX_LINK_FAILURES:
                continue
            if connect(degenerate[i].config, degenerate[j].config, cfg):
                uf.union(i, j)
            else:
                failures[key] = failures.get(key, 0) + 1
        groups = {}
        for i in range(n):
            groups.setdefault(uf.find(i), []).append(degenerate[i])
        for root in sorted(groups):
            fam = Family(members=groups[root])
            if cfg.family_samples > 0:
                fam.samples, fam.sample_residuals = sample_family(
                    fam.representative.config, cfg, cfg.family_samples)
            families.append(fam)
    return SearchReport(trajectories=isolated, families=families)
