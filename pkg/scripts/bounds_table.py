"""Table of every topological lower bound computed by the package.

    python scripts/bounds_table.py
"""
from billiards.catalog import (
    build_s2_triple_complex,
    component_count,
    schubert_bound,
    torus_quotient_profile,
    vnp_betti_sum,
)
from billiards.homology import (
    BettiProfile,
    cubic_bound,
    homology_dims,
    morse_lower_bound,
    smith_pipeline_bound,
)


def main():
    print("closed curves: components of T^p/D_p - Delta and the bound p - 1")
    for p in (3, 5, 7, 9):
        print(f"  p={p}: {component_count(p)} components, bound {morse_lower_bound(torus_quotient_profile(p))}")

    B = homology_dims(build_s2_triple_complex())
    print(f"\n2-sphere, p=3: relative Betti numbers {B.padded(7)}, bound {morse_lower_bound(B)}")

    print("\nperturbed n-spheres: Betti sum of V_{n,p} and the bound n(p - 1)")
    for n in (2, 3, 4, 5):
        row = ", ".join(f"p={p}: {schubert_bound(n, p)}" for p in (3, 5, 7))
        print(f"  n={n}: sum {vnp_betti_sum(n)}; {row}")

    print("\np=3 in a manifold with mod-3 Betti numbers b: cubic bound and per-degree Smith bound")
    for dims in [(1, 0, 1), (1, 2, 1), (1, 4, 1), (1, 0, 0, 1), (1, 2, 2, 1), (1, 4, 6, 4, 1)]:
        b = BettiProfile(dims, 3)
        print(f"  b={list(dims)} (B={b.total}): cubic {cubic_bound(b.total)}, integral Smith {smith_pipeline_bound(b)}")


if __name__ == "__main__":
    main()
