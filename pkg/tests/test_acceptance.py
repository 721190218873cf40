"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with pytest -s or in the
captured output).  Tolerances are pinned here, not tuned elsewhere.
"""

import json
import math
import time

import numpy as np
import pytest

from pointground import espace as E
from pointground import functionals as F
from pointground import verify as V
from pointground.cli import main as cli_main
from pointground.grid import build_grid, integrate
from pointground.solver import SolveOptions, multistart

FOUR_PI = 4.0 * math.pi


@pytest.fixture(scope="module")
def default_grid():
    return build_grid()


@pytest.fixture(scope="module")
def solve_grid():
    return build_grid(1024, 1e-4, 50.0)


def _report(number: int, name: str, ok: bool) -> None:
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {name}")
    assert ok, f"acceptance criterion {number} failed: {name}"


def test_criterion_1_closed_form_identity_suite(default_grid):
    start = time.monotonic()
    report = V.identity_suite(default_grid)
    elapsed = time.monotonic() - start
    by_check = {}
    for row in report.rows:
        by_check.setdefault(row["check"], []).append(row)
    quadrature_ok = all(
        row["residual"] <= (1e-3 if row["check"] in ("point_eval", "pairing_identity")
                            else 1e-5)
        for rows in by_check.values() for row in rows)
    ok = quadrature_ok and elapsed < 10.0
    _report(1, f"closed-form identity suite ({elapsed:.1f}s)", ok)


def test_criterion_2_gauge_invariance(default_grid):
    report = V.identity_suite(default_grid, corpus_size=50)
    gauge_rows = [row for row in report.rows if row["check"].startswith("gauge_")]
    closed_rows = [row for row in report.rows if row["check"] == "closed_gauge_form"]
    ok = (len(gauge_rows) == 12
          and all(row["residual"] <= 1e-5 for row in gauge_rows)
          and all(row["residual"] <= 1e-5 for row in closed_rows))
    _report(2, "gauge invariance over 50-state corpus", ok)


def test_criterion_3_gradient_correctness(default_grid):
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    specs = [F.ProblemSpec(F.NLSE, 0.5, 2.25, 0.5),
             F.ProblemSpec(F.KIRCHHOFF, 0.0, 2.25, 0.4),
             F.ProblemSpec(F.SCHRODINGER_POISSON, 0.3, 2.25, 0.4)]
    worst = 0.0
    for spec in specs:
        for _ in range(10):
            phi = np.zeros(default_grid.n)
            for _ in range(int(rng.integers(1, 3))):
                phi += rng.uniform(-1, 1) * np.exp(
                    -((default_grid.nodes / rng.uniform(0.5, 2.0)) ** 2))
            state = E.EnergyState(grid=default_grid, gauge=1.0, phi=phi,
                                  charge=float(rng.uniform(0.0, 1.0)))
            gphi, gq = F.gradient(spec, state)
            for _ in range(8):
                dphi = rng.uniform(-1, 1) * np.exp(
                    -((default_grid.nodes / rng.uniform(0.4, 2.0)) ** 2))
                dq = float(rng.uniform(-1.0, 1.0))
                analytic = float(gphi @ dphi) + gq * dq
                h = 1e-5
                up = E.EnergyState(grid=default_grid, gauge=1.0, phi=phi + h * dphi,
                                   charge=state.charge + h * dq)
                dn = E.EnergyState(grid=default_grid, gauge=1.0, phi=phi - h * dphi,
                                   charge=state.charge - h * dq)
                fd = (F.energy(spec, up).total - F.energy(spec, dn).total) / (2 * h)
                worst = max(worst, abs(analytic - fd) / max(abs(fd), 1e-10))
    elapsed = time.monotonic() - start
    ok = worst <= 1e-5 and elapsed < 60.0
    _report(3, f"gradient vs finite differences (worst {worst:.2e}, {elapsed:.1f}s)", ok)


def test_criterion_4_hartree_oracle(default_grid):
    from scipy.special import erf
    n = np.exp(-default_grid.nodes ** 2)
    psi = F.hartree_potential(default_grid, n)
    exact = math.pi ** 1.5 * erf(default_grid.nodes) / default_grid.nodes
    uniform_err = float(np.max(np.abs(psi - exact)))
    total = FOUR_PI * integrate(default_grid, n)
    monopole_err = abs(default_grid.nodes[-1] * psi[-1] - total) / total
    ok = uniform_err <= 1e-4 and monopole_err <= 1e-4
    _report(4, f"hartree oracle (uniform {uniform_err:.2e}, monopole {monopole_err:.2e})", ok)


def test_criterion_5_vanishing_extension_small_mass(solve_grid):
    options = SolveOptions()
    ok = True
    details = []
    for kind in (F.NLSE, F.KIRCHHOFF, F.SCHRODINGER_POISSON):
        for alpha in (0.0, 0.5):
            for rho in (0.2, 0.4):
                spec = F.ProblemSpec(kind, alpha, 2.25, rho)
                t0 = time.monotonic()
                free = multistart(spec, options, solve_grid)
                t_free = time.monotonic() - t0
                t0 = time.monotonic()
                pinned = multistart(spec, options, solve_grid, fix_q_zero=True)
                t_pinned = time.monotonic() - t0
                gap = pinned.energy.total - free.energy.total
                good = (free.converged and pinned.converged and gap > 1e-6
                        and free.state.charge > 1e-3 * rho
                        and t_free < 300.0 and t_pinned < 300.0)
                ok = ok and good
                details.append(f"{kind},a={alpha:g},rho={rho:g}:gap={gap:.2e}"
                               f",q={free.state.charge:.4f}")
    _report(5, "free-vs-pinned gaps at small mass [" + " ".join(details) + "]", ok)


def test_criterion_6_condition_one_scan(solve_grid):
    spec = F.ProblemSpec(F.NLSE, 0.5, 2.25, 0.8)
    report = V.small_mass_scan(spec, [0.8, 0.4, 0.2, 0.1], solve_grid, SolveOptions())
    ratios = [row["energy_over_rho2"] for row in report.rows]
    omegas = [row["omega"] for row in report.rows]
    ok = (all(r < 0 for r in ratios)
          and all(b > a for a, b in zip(ratios, ratios[1:]))
          and all(o > 0 for o in omegas)
          and all(b < a for a, b in zip(omegas, omegas[1:]))
          and all(row["converged"] for row in report.rows))
    _report(6, f"level ratios {['%.4f' % r for r in ratios]} rising to 0, "
               f"omegas {['%.4f' % o for o in omegas]} falling", ok)


def test_criterion_7_strict_subadditivity(solve_grid):
    spec = F.ProblemSpec(F.NLSE, 0.5, 2.25, 0.5)
    options = SolveOptions()
    report = V.subadditivity_scan(spec, [0.1, 0.2, 0.3, 0.4], solve_grid, options)
    margins = {round(row["mu"], 10): row["margin"] for row in report.rows}
    ok = all(m > 0 for m in margins.values()) and report.overall_pass
    # mu = 0.3 and mu = 0.4 are complements at r = 0.5
    noise = 2.0 * options.grad_tol * (1.0 + 0.03)
    ok = ok and abs(margins[0.3] - margins[0.4]) <= 2.0 * noise + 1e-12
    _report(7, f"sub-additivity margins {['%.2e' % margins[m] for m in sorted(margins)]}", ok)


def test_criterion_8_scaling_path_algebra(default_grid):
    phi = 0.8 * np.exp(-default_grid.nodes ** 2) \
        + 0.2 * np.exp(-((default_grid.nodes / 2.0) ** 2))
    state = E.EnergyState(grid=default_grid, gauge=1.0, phi=phi, charge=0.6)
    m0 = E.mass_sq(state)
    ok = True
    for beta in (-1.0, 0.0, 1.0):
        for theta in (0.5, 2.0):
            moved = F.scaling_path_apply(state, beta, theta)
            ok = ok and abs(E.mass_sq(moved) / m0 - theta ** 2) / theta ** 2 <= 1e-5
    worst_dev = 0.0
    for kind, alpha in ((F.NLSE, 0.5), (F.KIRCHHOFF, 0.0), (F.SCHRODINGER_POISSON, 0.3)):
        spec = F.ProblemSpec(kind, alpha, 2.25, 0.5)
        for beta in (-1.0, 0.0, 1.0):
            probe = F.scaling_path_probe(spec, state, beta)
            analytic = F.scaling_path_hprime_analytic(spec, state, beta)
            dev = abs(probe.hprime_numeric - analytic) / max(abs(analytic), 1e-14)
            worst_dev = max(worst_dev, dev)
            ok = ok and dev <= 1e-3
    nlse = F.ProblemSpec(F.NLSE, 0.5, 2.25, 0.5)
    collapse = -((nlse.p - 2.0) / nlse.p) * E.lp_norm_pow(state, nlse.p)
    probe0 = F.scaling_path_probe(nlse, state, 0.0)
    ok = ok and abs(probe0.hprime_numeric - collapse) / abs(collapse) <= 1e-4
    _report(8, f"scaling-path algebra (worst h'(1) dev {worst_dev:.2e})", ok)


def test_criterion_9_determinism_and_schema(tmp_path, capsys):
    base = ["solve", "--problem", "nlse", "--alpha", "0.5", "--p", "2.25",
            "--mass", "0.5", "--grid-n", "512", "--include-phi"]
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    code1 = cli_main(base + ["--out", str(out1)])
    code2 = cli_main(base + ["--out", str(out2)])
    bytes_equal = out1.read_bytes() == out2.read_bytes()

    record = json.loads(out1.read_text())
    reloaded = json.loads(json.dumps(record))
    roundtrip = reloaded == record

    scan_args = ["scan", "--kind", "mass", "--problem", "nlse", "--alpha", "0.5",
                 "--p", "2.25", "--grid-n", "512", "--masses", "0.4,0.2"]
    s1 = tmp_path / "s1.csv"
    s2 = tmp_path / "s2.csv"
    cli_main(scan_args + ["--out", str(s1)])
    cli_main(scan_args + ["--out", str(s2)])
    scans_equal = s1.read_bytes() == s2.read_bytes()
    # csv floats reparse to the exact binary values in the json record
    header = s1.read_text().splitlines()[0].split(",")
    row = dict(zip(header, s1.read_text().splitlines()[1].split(",")))
    csv_roundtrip = float(row["rho"]) == 0.4

    capsys.readouterr()
    ok = (code1 == code2 == 0 and bytes_equal and roundtrip
          and scans_equal and csv_roundtrip)
    _report(9, "determinism and schema round-trip", ok)
