import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billiards.catalog import (
    S2_TRIPLE_CELLS,
    SchubertClass,
    TorusCell,
    build_s2_triple_complex,
    cell_invariant,
    cell_moves,
    cell_vector,
    component_count,
    component_invariants,
    grassmann_betti,
    multiplication_matrix,
    pieri_multiply,
    schubert_basis,
    schubert_bound,
    sigma2_rank,
    torus_quotient_profile,
    vnp_betti_sum,
    vnp_profile,
    vnp_rows,
)
from billiards.homology import homology_dims, morse_lower_bound, rank


def _invariant_by_hand(perm):
    """Count cyclic descents/ascents directly from the coordinate order."""
    p = len(perm)
    where = {v: r for r, v in enumerate(perm)}
    desc = sum(where[i] > where[i % p + 1] for i in range(1, p + 1))
    return abs(desc - (p - desc))


# -- torus cells -------------------------------------------------------------


def test_invariant_examples():
    assert cell_invariant(TorusCell((1, 2, 3, 4, 5))) == 3
    assert cell_invariant(TorusCell((1, 3, 2, 4, 5))) == 1
    assert cell_invariant(TorusCell((1, 2, 3))) == 1
    with pytest.raises(ValueError):
        TorusCell((1, 1, 2))


@given(st.sampled_from([3, 5, 7, 9]).flatmap(lambda p: st.permutations(range(1, p + 1))))
@settings(max_examples=300, deadline=None)
def test_invariant_matches_direct_count(perm):
    c = TorusCell(tuple(perm))
    assert cell_invariant(c) == _invariant_by_hand(perm)
    assert cell_invariant(c) % 2 == 1


def test_blocked_swaps():
    # x1 < x2 < ... : neighbouring positions hold cyclically adjacent labels,
    # so no swap is allowed and move (3) adds nothing
    p = 5
    c = TorusCell.identity(p)
    moves = cell_moves(c)
    swaps = [TorusCell(tuple(c.perm[:i] + (c.perm[i + 1], c.perm[i]) + c.perm[i + 2:])) for i in range(p - 1)]
    assert not any(s in moves for s in swaps if s != c)
    d = TorusCell((1, 3, 5, 2, 4))
    allowed = TorusCell((3, 1, 5, 2, 4))
    assert allowed in cell_moves(d)
    # labels 5 and 1 are cyclic neighbours
    e = TorusCell((2, 5, 1, 3, 4))
    assert TorusCell((2, 1, 5, 3, 4)) not in cell_moves(e)


def test_rotation_move_present():
    c = TorusCell((1, 3, 5, 2, 4))
    assert TorusCell((3, 5, 2, 4, 1)) in cell_moves(c)


def test_moves_preserve_invariant_exhaustively_p3():
    cells = [TorusCell(p) for p in itertools.permutations(range(1, 4))]
    reached = {TorusCell.identity(3)}
    frontier = list(reached)
    while frontier:
        nxt = []
        for c in frontier:
            for m in cell_moves(c):
                if m not in reached:
                    reached.add(m)
                    nxt.append(m)
        frontier = nxt
    assert reached == {c for c in cells if cell_invariant(c) == 1} == set(cells)


def test_random_moves_preserve_invariant():
    rng = random.Random(0)
    for _ in range(10_000):
        p = rng.choice([3, 5, 7])
        perm = list(range(1, p + 1))
        rng.shuffle(perm)
        c = TorusCell(tuple(perm))
        m = rng.choice(cell_moves(c))
        assert cell_invariant(m) == cell_invariant(c)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_components(p):
    assert component_count(p) == (p - 1) // 2
    inv = component_invariants(p)
    assert all(len(v) == 1 for v in inv.values())
    values = sorted(next(iter(v)) for v in inv.values())
    assert values == list(range(1, p - 1, 2))


def test_component_count_range():
    with pytest.raises(ValueError):
        component_count(4)
    with pytest.raises(ValueError):
        component_count(11)


def test_torus_profile_bound():
    for p in (3, 5, 7):
        assert morse_lower_bound(torus_quotient_profile(p)) == p - 1


# -- the S^2 triple complex ----------------------------------------------------


def test_s2_complex_structure():
    C = build_s2_triple_complex()
    assert C.dims == {3: 2, 4: 8, 5: 12, 6: 6}
    assert (C.boundary(5) @ C.boundary(6)).is_zero()
    assert (C.boundary(4) @ C.boundary(5)).is_zero()
    assert C.boundary(3).is_zero()
    assert C.cell_euler() == 0


def test_s2_complex_homology():
    C = build_s2_triple_complex()
    B = homology_dims(C)
    assert B.padded(7) == [0, 0, 0, 1, 1, 1, 1]
    assert B.euler == C.cell_euler() == 0
    assert morse_lower_bound(B) == 4
    assert rank(C.boundary(6)) == 5
    assert rank(C.boundary(5)) == 6


def test_s2_complex_named_kernels():
    C = build_s2_triple_complex()
    omega_sum = cell_vector(C, 6, S2_TRIPLE_CELLS[6])
    assert not C.boundary(6).apply(omega_sum).any()
    sigma_sum = cell_vector(C, 5, [f"sigma{i}" for i in range(1, 7)])
    assert not C.boundary(5).apply(sigma_sum).any()
    # the image of d5 is spanned by the alpha and beta cells
    image = C.boundary(5).data
    assert not image[6:].any()
    assert rank(C.boundary(5)) == 6


# -- Schubert calculus -----------------------------------------------------------


def test_grassmann_betti_examples():
    assert grassmann_betti(2, 3) == 2
    assert grassmann_betti(4, 3) == 1
    assert all(grassmann_betti(0, n) == 1 for n in range(2, 10))
    assert grassmann_betti(-1, 3) == 0 and grassmann_betti(5, 3) == 0


@pytest.mark.parametrize("n", range(2, 12))
def test_grassmann_betti_symmetry_and_basis(n):
    top = 2 * (n - 1)
    for q in range(top + 1):
        assert grassmann_betti(q, n) == grassmann_betti(top - q, n)
        assert grassmann_betti(q, n) == len(schubert_basis(q, n))


def test_schubert_class_validation():
    with pytest.raises(ValueError):
        SchubertClass((3,), 4)
    with pytest.raises(ValueError):
        SchubertClass((1, 2), 4)
    with pytest.raises(ValueError):
        SchubertClass((1, 1, 1), 3)


def test_pieri_examples():
    prod = pieri_multiply(1, SchubertClass((1,), 3), 3)
    assert prod.partitions() == [(1, 1), (2,)]
    b = SchubertClass((2, 1), 4)
    assert pieri_multiply(2, b, 4).partitions() == [(2, 2, 1)]
    full = SchubertClass((2, 1, 1), 4)
    assert not pieri_multiply(2, full, 4)


@pytest.mark.parametrize("n", range(2, 7))
def test_pieri_outputs_are_valid(n):
    for q in range(2 * (n - 1) + 1):
        for b in schubert_basis(q, n):
            for a in (1, 2):
                for t in pieri_multiply(a, b, n).terms:
                    assert t.n == n and t.degree == q + a
                    SchubertClass(t.partition, n)


def test_sigma1_squared_is_total_degree_two():
    # sigma_1^2 = sigma_2 + sigma_{1,1} in general; both survive when n >= 3
    for n in range(3, 8):
        M = multiplication_matrix(1, 1, n)
        assert M.data.sum() == 2


@pytest.mark.parametrize("n", range(2, 9))
def test_sigma2_rank_pattern(n):
    top = 2 * (n - 1)
    for q in range(top - 1):
        r = sigma2_rank(q, n)
        assert r == min(grassmann_betti(q, n), grassmann_betti(q + 2, n))
    if n >= 2:
        assert grassmann_betti(n - 2, n) == grassmann_betti(n, n) == sigma2_rank(n - 2, n)


@pytest.mark.parametrize("n", range(2, 9))
def test_vnp_betti_sum(n):
    assert vnp_betti_sum(n) == 2 * n
    bottom, upper = vnp_rows(n)
    assert [q for q, d in enumerate(bottom) if d] == list(range(n))
    assert [q for q, d in enumerate(upper) if d] == list(range(n - 1, 2 * n - 1))
    assert all(d in (0, 1) for d in bottom + upper)
    assert vnp_profile(n).dims == (1,) * (2 * n)


def test_schubert_bound():
    assert schubert_bound(2, 3) == 4
    assert schubert_bound(3, 5) == 12
    with pytest.raises(ValueError):
        schubert_bound(2, 4)
