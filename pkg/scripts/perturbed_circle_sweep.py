"""Orbit counts and Hessian spectra on r = 1 - eps cos(p phi) as eps grows.

For each p and eps, runs the multistart search and prints the number of
D_p-orbits by Morse index next to the lower bound p - 1.  It also tracks the
index of the regular polygons themselves: when an eigenvalue of their Hessian
crosses zero, new orbits bifurcate off and the count exceeds the bound.

    python scripts/perturbed_circle_sweep.py --p 5 --eps 0.002 0.005 0.01 0.014 0.02
"""
import argparse
import math
import time

import numpy as np

from billiards.core import Configuration, morse_index, tangential_hessian
from billiards.manifold import PerturbedCircle
from billiards.search import SearchConfig, find_trajectories


def regular(M, p, w, phase):
    return Configuration.from_coords(M, phase + 2 * math.pi * w * np.arange(p) / p)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, nargs="+", default=[3, 5])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.002, 0.005, 0.01, 0.014, 0.02])
    ap.add_argument("--starts", type=int, default=500)
    ap.add_argument("--no-search", action="store_true", help="only print regular-polygon spectra")
    args = ap.parse_args()

    for p in args.p:
        print(f"p = {p}  (bound p - 1 = {p - 1})")
        print(f"{'eps':>8} {'orbits':>7}  {'by index':<28} regular polygons: (rotation, phase) -> index, smallest |eigenvalue|")
        for eps in args.eps:
            M = PerturbedCircle(eps, p)
            cells = []
            for w in range(1, (p - 1) // 2 + 1):
                for phase in (0.0, math.pi / p):
                    H = tangential_hessian(regular(M, p, w, phase))
                    idx, _ = morse_index(H)
                    lam = np.min(np.abs(np.linalg.eigvalsh(H)))
                    cells.append(f"({w},{phase:.2f})->{idx},{lam:.1e}")
            if args.no_search:
                count, hist, dt = "-", "", 0.0
            else:
                t = time.perf_counter()
                R = find_trajectories(M, SearchConfig(p=p, starts=args.starts))
                dt = time.perf_counter() - t
                hist = {}
                for r in R.trajectories:
                    hist[r.morse_index] = hist.get(r.morse_index, 0) + 1
                count, hist = R.isolated_count, str(dict(sorted(hist.items())))
            print(f"{eps:8.4f} {count!s:>7}  {hist:<28} {'  '.join(cells)}  [{dt:.1f} s]")
        print()


if __name__ == "__main__":
    main()
