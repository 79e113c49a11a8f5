import math

import numpy as np
import pytest

from billiards.core import Configuration, billiard_residual, orbit_distance, rotation_number
from billiards.manifold import Circle, Ellipsoid, PerturbedCircle, PerturbedSphere, Sphere
from billiards.search import (
    SearchConfig,
    classify_family,
    deduplicate,
    find_trajectories,
    initial_configurations,
    refine,
    sample_family,
)


def _circular_mismatch(rep, target):
    """Largest circular distance between the vertex angles and the target set."""
    a = rep.config.coords[:, 0][:, None] - np.asarray(target)[None, :]
    d = np.abs(np.mod(a + math.pi, 2 * math.pi) - math.pi)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(newton_tol=1e-3, descent_tol=1e-4)
    with pytest.raises(ValueError):
        SearchConfig(dedup_tol=1e-12)
    with pytest.raises(ValueError):
        SearchConfig(diagonal_tolerance=-1.0)
    with pytest.raises(ValueError):
        SearchConfig(p=1)
    cfg = SearchConfig().resolved(Sphere(2, radius=2.0))
    assert cfg.diagonal_tolerance == pytest.approx(4e-3)
    assert cfg.family_tol == pytest.approx(4e-2)


def test_refine_contracts_to_nondegenerate_point():
    P = PerturbedCircle(0.02, 3)
    start = Configuration.from_coords(P, [0.05, 2 * math.pi / 3 - 0.02, 4 * math.pi / 3 + 0.03])
    rep = refine(start, SearchConfig(p=3))
    assert rep.flag == "ok"
    target = np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
    assert orbit_distance(rep.config, Configuration.from_coords(P, target)) < 1e-8
    assert rep.morse_index == 2


def test_refine_fixed_point():
    P = PerturbedCircle(0.02, 3)
    c = Configuration.from_coords(P, [math.pi / 3, math.pi, 5 * math.pi / 3])
    rep = refine(c, SearchConfig(p=3))
    assert rep.flag == "ok" and rep.iterations <= 1
    assert np.allclose(rep.config.ambient, c.ambient, atol=1e-12)


def test_refine_rejects_diagonal_start():
    P = PerturbedCircle(0.02, 3)
    c = Configuration.from_coords(P, [1.0, 1.0 + 1e-5, 3.0])
    assert refine(c, SearchConfig(p=3)).flag == "diagonal"


def test_starts_avoid_diagonal_and_are_deterministic():
    M = Ellipsoid([1.0, 1.1, 1.2])
    cfg = SearchConfig(p=3, starts=64, seed=7).resolved(M)
    a = initial_configurations(M, cfg)
    b = initial_configurations(M, cfg)
    assert len(a) == len(b) > 50
    for x, y in zip(a, b):
        assert np.array_equal(x.ambient, y.ambient)
        gaps = np.linalg.norm(np.roll(x.ambient, -1, 0) - x.ambient, axis=1)
        assert gaps.min() >= 2 * cfg.diagonal_tolerance


def test_perturbed_circle_p3_search():
    P = PerturbedCircle(0.02, 3)
    R = find_trajectories(P, SearchConfig(p=3, starts=100))
    assert R.isolated_count == 2 and not R.families
    by_index = {r.morse_index: r for r in R.trajectories}
    assert set(by_index) == {2, 3}
    assert _circular_mismatch(by_index[2], [0, 2 * math.pi / 3, 4 * math.pi / 3]) < 1e-6
    assert _circular_mismatch(by_index[3], [math.pi / 3, math.pi, 5 * math.pi / 3]) < 1e-6
    for r in R.trajectories:
        assert billiard_residual(r.config) < 1e-10
    assert R.starts_converged + R.rejected_diagonal + R.not_converged == R.starts_total


def test_search_is_deterministic():
    P = PerturbedCircle(0.02, 3)
    cfg = SearchConfig(p=3, starts=40, seed=3)
    a, b = find_trajectories(P, cfg), find_trajectories(P, cfg)
    assert [r.length for r in a.trajectories] == [r.length for r in b.trajectories]
    for x, y in zip(a.trajectories, b.trajectories):
        assert np.array_equal(x.config.ambient, y.config.ambient)


def test_doubling_starts_keeps_count():
    P = PerturbedCircle(0.005, 5)
    small = find_trajectories(P, SearchConfig(p=5, starts=150))
    large = find_trajectories(P, SearchConfig(p=5, starts=300))
    assert small.isolated_count == large.isolated_count == 4
    assert sorted((r.morse_index, r.rotation_number) for r in large.trajectories) == [
        (4, 1), (4, 2), (5, 1), (5, 2)]


def test_zero_starts_gives_empty_report():
    R = find_trajectories(Circle(), SearchConfig(p=3, starts=0))
    assert R.isolated_count == 0 and not R.families
    assert R.diagnostics


def test_deduplicate_merges_orbit_copies():
    P = PerturbedCircle(0.02, 3)
    c = Configuration.from_coords(P, [0.0, 2 * math.pi / 3, 4 * math.pi / 3])
    cfg = SearchConfig(p=3)
    reps = [refine(c.permuted(g), cfg) for g in [(0, 1, 2), (1, 2, 0), (2, 1, 0)]]
    assert len(deduplicate(reps, 1e-5)) == 1


def test_round_circle_is_one_family():
    R = find_trajectories(Circle(), SearchConfig(p=3, starts=60, family_samples=100))
    assert R.isolated_count == 0 and len(R.families) == 1
    fam = R.families[0]
    assert fam.null_dim == 1
    assert fam.length == pytest.approx(3 * math.sqrt(3), abs=1e-9)
    assert len(fam.samples) == 100 and max(fam.sample_residuals) < 1e-8


def test_perturbed_circle_never_merges():
    P = PerturbedCircle(0.02, 3)
    R = find_trajectories(P, SearchConfig(p=3, starts=50))
    reports = classify_family(R.trajectories, SearchConfig(p=3), P)
    assert len(reports.trajectories) == 2 and not reports.families


def test_round_sphere_family_has_dimension_three():
    R = find_trajectories(Sphere(2), SearchConfig(p=3, starts=60, family_samples=20))
    assert R.isolated_count == 0 and len(R.families) == 1
    fam = R.families[0]
    assert fam.null_dim == 3
    assert fam.length == pytest.approx(3 * math.sqrt(3), abs=1e-9)
    assert max(fam.sample_residuals) < 1e-8


def test_ellipsoid_p3_trajectories_come_in_families():
    # every principal section of an ellipsoid is an ellipse, where 3-periodic
    # orbits form a one-parameter family; they survive in the ambient problem
    R = find_trajectories(Ellipsoid([1.0, 1.1, 1.2]), SearchConfig(p=3, starts=200, family_samples=10))
    assert len(R.families) == 3
    assert all(f.null_dim == 1 for f in R.families)
    assert all(max(f.sample_residuals) < 1e-8 for f in R.families)


def test_family_samples_stay_critical():
    c = Configuration.from_coords(Circle(), 2 * math.pi * np.arange(5) * 2 / 5)
    cfg = SearchConfig(p=5).resolved(Circle())
    samples, residuals = sample_family(c, cfg, 30)
    assert len(samples) == 30 and max(residuals) < 1e-8
    assert {rotation_number(s) for s in samples} == {2}
    spread = max(orbit_distance(samples[0], s) for s in samples)
    assert spread > 0.1


def test_perturbed_sphere_has_isolated_orbits():
    R = find_trajectories(PerturbedSphere(2, 0.1), SearchConfig(p=3, starts=300))
    assert R.isolated_count >= 4
    for r in R.trajectories:
        assert billiard_residual(r.config) < 1e-10 and r.null_dim == 0
