"""Holonomy of the cat-state pair F = (a - alpha0)(a - alpha1) as alpha1 circles a point.

The coherence |alpha1><alpha0| picks up a phase of magnitude twice the
enclosed phase-space area.

    python scripts/cat_holonomy.py --radius 0.5 --center -2 --trunc 40 --steps 800
"""
import argparse
import time

import numpy as np

from fourcorners.geometry import ParameterFamily, Path, holonomy_operator
from fourcorners.models import cat_pair, coherent_state


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alpha0", type=float, default=2.0)
    p.add_argument("--center", type=complex, default=-2.0)
    p.add_argument("--radius", type=float, nargs="+", default=[0.5])
    p.add_argument("--trunc", type=int, default=40)
    p.add_argument("--steps", type=int, default=800)
    args = p.parse_args(argv)

    N, a0, c = args.trunc, args.alpha0, args.center
    k0 = coherent_state(a0, N)
    print("radius,phase,twice_area,relative_error,seconds")
    for r in args.radius:
        t = time.perf_counter()
        fam = ParameterFamily(lambda x, r=r: cat_pair(a0, c + r * np.exp(1j * x[0]), N), 1, projector="dark")
        path = Path(lambda s: np.array([2 * np.pi * s]), closed=True)
        k1 = coherent_state(c + r, N)
        out = holonomy_operator(fam, path, args.steps, apply_to=[np.outer(k1, k0.conj())])[0]
        phase = float(np.angle(k1.conj() @ out @ k0))
        want = 2 * np.pi * r * r
        print(f"{r},{phase!r},{want!r},{abs(abs(phase) - want) / want:.3e},{time.perf_counter() - t:.1f}")


if __name__ == "__main__":
    main()
