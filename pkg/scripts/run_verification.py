#!/usr/bin/env python3
"""Run the full verification suite and dump the reports next to this script.

Produces identity.csv, gn.csv and pohozaev.csv plus a summary line per
report; exits nonzero if anything failed.
"""

import pathlib
import sys

from pointground.functionals import NLSE, ProblemSpec
from pointground.grid import build_grid
from pointground.solver import SolveOptions, multistart
from pointground.verify import gn_scan, identity_suite, pohozaev_probe

OUT_DIR = pathlib.Path(__file__).resolve().parent / "out"


def main() -> int:
    OUT_DIR.mkdir(exist_ok=True)
    grid = build_grid()

    reports = {}
    reports["identity"] = identity_suite(grid)
    reports["gn"] = gn_scan(grid)

    spec = ProblemSpec(NLSE, 0.5, 2.25, 0.5)
    result = multistart(spec, SolveOptions(), grid)
    reports["pohozaev"] = pohozaev_probe(spec, result)

    ok = True
    for name, report in reports.items():
        report.to_csv(str(OUT_DIR / f"{name}.csv"))
        report.to_json(str(OUT_DIR / f"{name}.json"))
        status = "PASS" if report.overall_pass else "FAIL"
        print(f"{status} {name}: {sum(report.passes)}/{len(report.rows)} checks")
        ok = ok and report.overall_pass
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
