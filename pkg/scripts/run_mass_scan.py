#!/usr/bin/env python3
"""Small-mass level structure for one problem across a decreasing mass list.

Example:
    python3 scripts/run_mass_scan.py nlse 0.5 2.25 0.8,0.4,0.2,0.1,0.05
"""

import pathlib
import sys

from pointground.functionals import ProblemSpec
from pointground.grid import build_grid
from pointground.solver import SolveOptions
from pointground.verify import small_mass_scan

OUT_DIR = pathlib.Path(__file__).resolve().parent / "out"


def main() -> int:
    problem = sys.argv[1] if len(sys.argv) > 1 else "nlse"
    alpha = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
    p = float(sys.argv[3]) if len(sys.argv) > 3 else 2.25
    masses = [float(v) for v in (sys.argv[4] if len(sys.argv) > 4
                                 else "0.8,0.4,0.2,0.1").split(",")]

    OUT_DIR.mkdir(exist_ok=True)
    spec = ProblemSpec(problem, alpha, p, masses[0])
    report = small_mass_scan(spec, masses, build_grid(1024, 1e-4, 50.0),
                             SolveOptions(), jobs=2)
    out = OUT_DIR / f"mass_{problem}_a{alpha:g}_p{p:g}.csv"
    report.to_csv(str(out))
    print(report.csv_text(), end="")
    print(f"wrote {out}")
    return 0 if report.overall_pass else 2


if __name__ == "__main__":
    sys.exit(main())
