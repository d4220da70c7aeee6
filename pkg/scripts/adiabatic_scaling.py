"""Finite-time adiabatic transport on a rotating four-level DFS family.

Integrates (1/T) d_s rho = L(s) rho for several T and reports the deviation
from the holonomy prediction and from the first-order corrected prediction.

    python scripts/adiabatic_scaling.py --T 50 100 200 400
"""
import argparse

import numpy as np

from fourcorners.corners import model_gaps
from fourcorners.geometry import ParameterFamily, Path, adiabatic_propagate
from fourcorners.models import four_level, random_hermitian


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--T", type=float, nargs="+", default=[50, 100, 200],
                   help="total times in units of 1/delta_edg")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--steps", type=int, default=200)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    w, V = np.linalg.eigh(random_hermitian(4, rng))
    U = lambda th: (V * np.exp(-1j * th * w)) @ V.conj().T  # noqa: E731
    fam = ParameterFamily(lambda x: four_level(0.0, 0.0, basis=U(x[0])), 1)
    d_edg = model_gaps(fam.model(np.array([0.0]))).delta_edg
    psi = U(0.0)[:, :2]
    rho0 = psi @ np.array([[0.6, 0.3 - 0.2j], [0.3 + 0.2j, 0.4]]) @ psi.conj().T
    path = Path(lambda s: np.array([s]))

    print(f"# delta_edg = {d_edg:.6g}")
    print("T_times_delta_edg,deviation,corrected_deviation,leakage_norm,ratio_to_previous")
    prev = None
    for c in args.T:
        r = adiabatic_propagate(fam, path, c / d_edg, rho0, n_steps=args.steps)
        ratio = "" if prev is None else f"{prev / r.deviation:.3f}"
        print(f"{c},{r.deviation:.6e},{r.corrected_deviation:.6e},{r.leakage_norm:.6e},{ratio}")
        prev = r.deviation


if __name__ == "__main__":
    main()
