#!/usr/bin/env python3
"""Free vs charge-pinned ground-state energies across problems and strengths.

Reproduces the strict level gap that forces minimizers out of the
regular subspace at small mass.
"""

import pathlib
import sys

from pointground.functionals import KIRCHHOFF, NLSE, SCHRODINGER_POISSON, ProblemSpec
from pointground.grid import build_grid
from pointground.solver import SolveOptions
from pointground.verify import vanishing_check

OUT_DIR = pathlib.Path(__file__).resolve().parent / "out"


def main() -> int:
    OUT_DIR.mkdir(exist_ok=True)
    grid = build_grid(1024, 1e-4, 50.0)
    options = SolveOptions()
    ok = True
    print("problem alpha rho      e_free         e_pinned       gap        q_free")
    for kind in (NLSE, KIRCHHOFF, SCHRODINGER_POISSON):
        for alpha in (0.0, 0.5):
            for rho in (0.2, 0.4):
                spec = ProblemSpec(kind, alpha, 2.25, rho)
                report = vanishing_check(spec, grid, options)
                row = report.rows[0]
                ok = ok and report.overall_pass
                print(f"{kind:9s} {alpha:4.1f} {rho:4.1f} "
                      f"{row['e_free']:14.8e} {row['e_pinned']:14.8e} "
                      f"{row['gap']:10.3e} {row['q_free']:8.5f}")
                report.to_csv(str(OUT_DIR / f"vanishing_{kind}_a{alpha:g}_r{rho:g}.csv"))
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
