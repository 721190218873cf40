"""Scans and identity checks for the claims the solver is built on.

Every scan produces a ScanReport whose pass flags are pure functions of
the recorded rows and tolerances: recompute_passes(report) re-derives
them from the stored values alone, so tolerances can be retuned without
re-running the underlying solves.

The probe for the stationary-state scaling identities reports residuals
without asserting they vanish: those identities arise for hypothetical
minimizer sequences inside a contradiction argument, and actual
small-mass minimizers are expected to violate them.  The only asserted
property is consistency between the analytic and numeric path
derivatives.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import espace as es
from . import functionals as fn
from .green import (FOUR_PI, green_diff_eval, green_eval, green_l2_norm_sq,
                    green_lr_norm_pow, green_pair_inner,
                    green_pair_inner_quadrature, point_eval_identity_residual)
from .grid import RadialGrid, build_grid, differentiate, integrate
from .solver import GroundStateResult, MultistartError, SolveOptions, multistart

GN_DEFAULT_EXPONENTS = (2.1, 2.25, 2.5, 2.9)
GN_DEFAULT_SAMPLES = 200

# calibrated on the default grid with seed 0 and the defaults above;
# reruns with the same seed must not exceed these by more than 0.1%
GN_FROZEN_CALIBRATION = {
    2.1: 0.8619946853671048,
    2.25: 0.6698856384390175,
    2.5: 0.45934746842571955,
    2.9: 0.2977309107091852,
}


@dataclass(frozen=True)
class ScanReport:
    kind: str
    columns: tuple
    rows: tuple          # tuple of dicts, one per scan point
    tolerances: dict
    meta: dict = field(default_factory=dict)

    @property
    def passes(self) -> list[bool]:
        return recompute_passes(self)

    @property
    def overall_pass(self) -> bool:
        return all(self.passes)

    def to_json(self, path: str) -> None:
        doc = {"kind": self.kind, "columns": list(self.columns),
               "rows": list(self.rows), "tolerances": self.tolerances,
               "meta": self.meta, "passes": self.passes,
               "overall_pass": self.overall_pass}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)

    def csv_text(self) -> str:
        lines = [",".join(list(self.columns) + ["pass"])]
        for row, ok in zip(self.rows, self.passes):
            cells = [_csv_cell(row.get(c)) for c in self.columns]
            cells.append("true" if ok else "false")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def recompute_passes(report: ScanReport) -> list[bool]:
    """Re-derive every pass flag from the stored rows and tolerances."""
    kind = report.kind
    rows = report.rows
    tol = report.tolerances
    if kind == "identity":
        return [row["residual"] <= row["tol"] for row in rows]
    if kind == "gn":
        out = []
        for row in rows:
            ok = row["scaling_dev"] <= tol["scaling_dev"]
            frozen = row.get("frozen_k")
            if frozen is not None and not (isinstance(frozen, float) and math.isnan(frozen)):
                ok = ok and row["k_hat"] <= frozen * (1.0 + tol["calibration_slack"])
            out.append(ok)
        return out
    if kind == "subadd":
        return [row["status"] == "pass" for row in rows]
    if kind == "mass":
        out = []
        prev_ratio = None
        prev_omega = None
        nlse = report.meta.get("problem") == fn.NLSE
        for row in rows:  # rows are ordered by decreasing rho
            ok = bool(row["converged"])
            ok = ok and row["energy_over_rho2"] < 0.0
            ok = ok and row["q"] > tol["q_floor_factor"] * row["rho"]
            if prev_ratio is not None:
                ok = ok and row["energy_over_rho2"] > prev_ratio
            if nlse:
                ok = ok and row["omega"] > 0.0
                if prev_omega is not None:
                    ok = ok and row["omega"] < prev_omega
            prev_ratio = row["energy_over_rho2"]
            prev_omega = row["omega"]
            out.append(ok)
        return out
    if kind == "vanishing":
        return [row["status"] == "pass" for row in rows]
    if kind == "pohozaev":
        return [row["rel_dev"] <= tol["hprime_rel"] and row["h_at_one"] == 0.0
                for row in rows]
    raise ValueError(f"unknown scan kind {kind!r}")


def _state_corpus(grid: RadialGrid, count: int, seed: int) -> list[es.EnergyState]:
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        phi = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, 4))):
            amp = float(rng.uniform(-1.5, 1.5))
            width = float(rng.uniform(0.4, 2.5))
            phi += amp * np.exp(-((grid.nodes / width) ** 2))
        charge = float(rng.uniform(0.0, 1.5))
        gauge = float(rng.choice([0.25, 1.0, 4.0]))
        states.append(es.EnergyState(grid=grid, gauge=gauge, phi=phi, charge=charge))
    return states


def identity_suite(grid: RadialGrid | None = None, corpus_size: int = 50,
                   seed: int = 0) -> ScanReport:
    """Closed-form vs quadrature and gauge-invariance checks in one table.

    Residuals are maxima over the relevant parameter sets, so a single
    row summarizes each family of checks.
    """
    if grid is None:
        grid = build_grid()
    rows = []

    def add(check: str, param: str, residual: float, tol: float) -> None:
        rows.append({"check": check, "param": param,
                     "residual": float(residual), "tol": float(tol)})

    for lam in (0.25, 1.0, 4.0, 16.0):
        quad = green_pair_inner_quadrature(grid, lam, lam)
        exact = green_l2_norm_sq(lam)
        add("green_l2", f"lam={lam:g}", abs(quad - exact) / exact, 1e-8)

    for lam, mu in ((1.0, 4.0), (0.25, 4.0), (1.0, 16.0)):
        quad = green_pair_inner_quadrature(grid, lam, mu)
        exact = green_pair_inner(lam, mu)
        add("green_pair", f"lam={lam:g},mu={mu:g}", abs(quad - exact) / exact, 1e-8)

    for s in (2.1, 2.25, 2.5, 2.9):
        worst = 0.0
        for lam in (0.25, 1.0, 4.0):
            state = es.EnergyState(grid=grid, gauge=lam, phi=np.zeros(grid.n), charge=1.0)
            quad = es.lp_norm_pow(state, s)
            exact = green_lr_norm_pow(lam, s)
            worst = max(worst, abs(quad - exact) / exact)
        add("green_lr", f"s={s:g}", worst, 1e-5)

    for lam, mu in ((1.0, 4.0), (0.25, 1.0), (4.0, 16.0)):
        worst = 0.0
        for width in (0.5, 1.0, 2.0):
            phi = np.exp(-((grid.nodes / width) ** 2))
            diff = green_diff_eval(lam, mu, grid.nodes)
            lhs = FOUR_PI * integrate(grid, differentiate(grid, diff)
                                      * differentiate(grid, phi))
            rhs = FOUR_PI * integrate(grid, (mu * green_eval(mu, grid.nodes)
                                             - lam * green_eval(lam, grid.nodes)) * phi)
            norm = math.sqrt(FOUR_PI * integrate(grid, phi * phi))
            worst = max(worst, abs(lhs - rhs) / (1.0 + norm))
        add("pairing_identity", f"lam={lam:g},mu={mu:g}", worst, 1e-3)

    add("point_eval", "gauss,lam=1",
        point_eval_identity_residual(grid, np.exp(-grid.nodes ** 2), 1.0), 1e-3)
    add("point_eval", "gauss2,lam=2",
        point_eval_identity_residual(grid, np.exp(-2.0 * grid.nodes ** 2), 2.0), 1e-3)

    corpus = _state_corpus(grid, corpus_size, seed)
    for mu in (0.25, 1.0, 4.0, 16.0):
        worst_h = worst_m = worst_p = 0.0
        for state in corpus:
            h0 = es.h_alpha(state, 0.5)
            m0 = es.mass_sq(state)
            p0 = es.lp_norm_pow(state, 2.25)
            moved = es.regauge(state, mu)
            worst_h = max(worst_h, abs(es.h_alpha(moved, 0.5) - h0) / (1.0 + abs(h0)))
            worst_m = max(worst_m, abs(es.mass_sq(moved) - m0) / (1.0 + m0))
            worst_p = max(worst_p, abs(es.lp_norm_pow(moved, 2.25) - p0) / (1.0 + p0))
        add("gauge_h", f"mu={mu:g}", worst_h, 1e-5)
        add("gauge_mass", f"mu={mu:g}", worst_m, 1e-5)
        add("gauge_lp", f"mu={mu:g}", worst_p, 1e-5)

    worst = 0.0
    for state in corpus:
        if state.charge < 1e-6:
            continue
        closed = es.h_alpha_closed_gauge(state, 0.5)
        generic = es.h_alpha_star_gauge(state, 0.5)
        worst = max(worst, abs(closed - generic) / (1.0 + abs(generic)))
    add("closed_gauge_form", "corpus", worst, 1e-5)

    return ScanReport(kind="identity",
                      columns=("check", "param", "residual", "tol"),
                      rows=tuple(rows),
                      tolerances={"per_row": "see tol column"},
                      meta={"grid": grid.descriptor(), "corpus_size": corpus_size,
                            "seed": seed})


def gn_scan(grid: RadialGrid | None = None,
            r_exponents: tuple = GN_DEFAULT_EXPONENTS,
            sample_count: int = GN_DEFAULT_SAMPLES,
            seed: int = 0,
            frozen: dict | None = GN_FROZEN_CALIBRATION) -> ScanReport:
    """Empirical interpolation-inequality constants over random states.

    For each exponent r, draws random singular states and records the
    largest ratio of ||u||_{L^r}^r to the two-term bound bracket; the
    exact lambda-scaling of pure Green states is checked alongside.
    """
    if grid is None:
        grid = build_grid()
    if sample_count < 100:
        raise ValueError("sample_count must be at least 100")
    rng = np.random.default_rng(seed)
    samples = []
    while len(samples) < sample_count:
        phi = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, 4))):
            amp = float(rng.uniform(-2.0, 2.0))
            width = float(rng.uniform(0.3, 3.0))
            phi += amp * np.exp(-((grid.nodes / width) ** 2))
        charge = float(rng.uniform(0.0, 2.0))
        gauge = float(np.exp(rng.uniform(math.log(0.25), math.log(4.0))))
        state = es.EnergyState(grid=grid, gauge=gauge, phi=phi, charge=charge)
        if es.mass_sq(state) > 1e-12:
            samples.append(state)

    dirichlet = [es.dirichlet_sq(grid, s.phi) for s in samples]
    phi_l2 = [FOUR_PI * integrate(grid, s.phi * s.phi) for s in samples]

    rows = []
    for r in r_exponents:
        k_hat = 0.0
        for state, w12, pl2 in zip(samples, dirichlet, phi_l2):
            bracket = (w12 ** (0.75 * (r - 2.0)) * pl2 ** ((6.0 - r) / 4.0)
                       + state.charge ** r / state.gauge ** ((3.0 - r) / 2.0))
            if bracket <= 0.0:
                continue
            k_hat = max(k_hat, es.lp_norm_pow(state, r) / bracket)
        base = es.lp_norm_pow(
            es.EnergyState(grid=grid, gauge=1.0, phi=np.zeros(grid.n), charge=1.0), r)
        dev = 0.0
        for lam in (0.25, 1.0, 4.0):
            state = es.EnergyState(grid=grid, gauge=lam, phi=np.zeros(grid.n), charge=1.0)
            scaled = es.lp_norm_pow(state, r) * lam ** ((3.0 - r) / 2.0)
            dev = max(dev, abs(scaled / base - 1.0))
        frozen_k = float(frozen[r]) if frozen is not None and r in frozen else math.nan
        rows.append({"r": float(r), "k_hat": float(k_hat), "frozen_k": frozen_k,
                     "scaling_dev": float(dev)})

    return ScanReport(kind="gn",
                      columns=("r", "k_hat", "frozen_k", "scaling_dev"),
                      rows=tuple(rows),
                      tolerances={"scaling_dev": 1e-6, "calibration_slack": 1e-3},
                      meta={"grid": grid.descriptor(), "seed": seed,
                            "sample_count": sample_count})


def _solve_levels(spec: fn.ProblemSpec, levels, grid: RadialGrid,
                  options: SolveOptions, jobs: int = 1,
                  fix_q_zero: bool = False) -> dict:
    """Ground-state level map rho -> result (or None on failure)."""
    levels = sorted(set(float(v) for v in levels))

    def solve(rho: float):
        level_spec = fn.ProblemSpec(spec.kind, spec.alpha, spec.p, rho,
                                    allow_p_beyond_theory=spec.allow_p_beyond_theory)
        try:
            return rho, multistart(level_spec, options, grid, fix_q_zero=fix_q_zero)
        except MultistartError:
            return rho, None

    if jobs <= 1:
        pairs = [solve(rho) for rho in levels]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(solve, levels))
    return dict(pairs)


def subadditivity_scan(spec: fn.ProblemSpec, mu_values, grid: RadialGrid | None = None,
                       options: SolveOptions | None = None, jobs: int = 1) -> ScanReport:
    """Strict sub-additivity margins of the ground-state level map.

    For each mu in (0, rho): margin = I(mu^2) + I(rho^2 - mu^2) - I(rho^2),
    which must be positive.  Non-converged levels mark the point
    inconclusive rather than passing.
    """
    if grid is None:
        grid = build_grid()
    options = options or SolveOptions()
    r = spec.rho
    mu_values = [float(m) for m in mu_values]
    if not mu_values:
        raise ValueError("mu grid must be nonempty")
    if any(not (0.0 < m < r) for m in mu_values):
        raise ValueError("mu grid must lie strictly inside (0, rho)")

    complements = [math.sqrt(r * r - m * m) for m in mu_values]
    levels = _solve_levels(spec, [r, *mu_values, *complements], grid, options, jobs)

    rows = []
    for m, mc in zip(mu_values, complements):
        res_m = levels[m]
        res_mc = levels[mc]
        res_r = levels[r]
        ok = all(x is not None and x.converged for x in (res_m, res_mc, res_r))
        if not ok:
            rows.append({"mu": m, "mu_comp": mc, "i_mu": math.nan, "i_comp": math.nan,
                         "i_r": math.nan, "margin": math.nan, "ratio_mu": math.nan,
                         "status": "inconclusive"})
            continue
        i_mu = res_m.energy.total
        i_mc = res_mc.energy.total
        i_r = res_r.energy.total
        margin = i_mu + i_mc - i_r
        rows.append({"mu": m, "mu_comp": mc, "i_mu": i_mu, "i_comp": i_mc,
                     "i_r": i_r, "margin": margin, "ratio_mu": i_mu / (m * m),
                     "status": "pass" if margin > 0.0 else "fail"})
    rows.sort(key=lambda row: row["mu"])

    return ScanReport(kind="subadd",
                      columns=("mu", "mu_comp", "i_mu", "i_comp", "i_r",
                               "margin", "ratio_mu", "status"),
                      rows=tuple(rows),
                      tolerances={"margin_floor": 0.0,
                                  "energy_noise": 2.0 * options.grad_tol},
                      meta={"grid": grid.descriptor(), "problem": spec.kind,
                            "alpha": spec.alpha, "p": spec.p, "rho": r})


def small_mass_scan(spec: fn.ProblemSpec, rho_values, grid: RadialGrid | None = None,
                    options: SolveOptions | None = None, jobs: int = 1) -> ScanReport:
    """Level structure as the mass shrinks: I/rho^2 up to 0, omega, q*.

    rho_values must be strictly decreasing; rows keep that order so the
    monotonicity flags read top-down.
    """
    if grid is None:
        grid = build_grid()
    options = options or SolveOptions()
    rho_values = [float(v) for v in rho_values]
    if not rho_values:
        raise ValueError("rho list must be nonempty")
    if any(b >= a for a, b in zip(rho_values, rho_values[1:])):
        raise ValueError("rho list must be strictly decreasing")

    levels = _solve_levels(spec, rho_values, grid, options, jobs)
    rows = []
    for rho in rho_values:
        res = levels[rho]
        if res is None:
            rows.append({"rho": rho, "energy": math.nan, "energy_over_rho2": math.nan,
                         "omega": math.nan, "q": math.nan, "converged": False})
            continue
        rows.append({"rho": rho, "energy": res.energy.total,
                     "energy_over_rho2": res.energy.total / rho ** 2,
                     "omega": res.omega, "q": res.state.charge,
                     "converged": bool(res.converged)})

    return ScanReport(kind="mass",
                      columns=("rho", "energy", "energy_over_rho2", "omega", "q",
                               "converged"),
                      rows=tuple(rows),
                      tolerances={"q_floor_factor": 1e-3},
                      meta={"grid": grid.descriptor(), "problem": spec.kind,
                            "alpha": spec.alpha, "p": spec.p})


def vanishing_check(spec: fn.ProblemSpec, grid: RadialGrid | None = None,
                    options: SolveOptions | None = None) -> ScanReport:
    """Free vs charge-pinned minimization: the strict level gap.

    Also reports phi(0) of the pinned minimizer, whose nonvanishing is
    the hypothesis under which the strict gap is guaranteed.
    """
    if grid is None:
        grid = build_grid()
    options = options or SolveOptions()
    free = pinned = None
    try:
        free = multistart(spec, options, grid)
    except MultistartError:
        pass
    try:
        pinned = multistart(spec, options, grid, fix_q_zero=True)
    except MultistartError:
        pass
    ok = free is not None and pinned is not None and free.converged and pinned.converged
    if not ok:
        row = {"rho": spec.rho, "alpha": spec.alpha, "e_free": math.nan,
               "e_pinned": math.nan, "gap": math.nan, "q_free": math.nan,
               "phi0_pinned": math.nan, "status": "inconclusive"}
    else:
        gap = pinned.energy.total - free.energy.total
        row = {"rho": spec.rho, "alpha": spec.alpha,
               "e_free": free.energy.total, "e_pinned": pinned.energy.total,
               "gap": gap, "q_free": free.state.charge,
               "phi0_pinned": es.state_phi_at_zero(pinned.state),
               "status": "pass" if gap > 1e-6 else "fail"}
    return ScanReport(kind="vanishing",
                      columns=("rho", "alpha", "e_free", "e_pinned", "gap",
                               "q_free", "phi0_pinned", "status"),
                      rows=(row,),
                      tolerances={"gap_floor": 1e-6},
                      meta={"grid": grid.descriptor(), "problem": spec.kind,
                            "alpha": spec.alpha, "p": spec.p, "rho": spec.rho})


def pohozaev_probe(spec: fn.ProblemSpec, result: GroundStateResult,
                   betas=(-1.0, 0.0, 1.0)) -> ScanReport:
    """Scaling-path derivative consistency at a converged state.

    The PASS criterion is analytic-vs-numeric agreement of h'(1) only.
    The stationary-sequence identity residuals (Kirchhoff:
    H^2/2 - (p-2)/p C; SP: B/2 - (p-2)/p C) are recorded as information,
    never asserted: for true small-mass minimizers they are expected to
    be nonzero.
    """
    if not result.converged:
        raise ValueError("pohozaev_probe requires a converged result")
    state = result.state
    c = es.lp_norm_pow(state, spec.p)
    h = es.h_alpha(state, spec.alpha)
    if spec.kind == fn.KIRCHHOFF:
        info_residual = 0.5 * h * h - (spec.p - 2.0) / spec.p * c
    elif spec.kind == fn.SCHRODINGER_POISSON:
        info_residual = 0.5 * fn.hartree_b(state.grid, state) - (spec.p - 2.0) / spec.p * c
    else:
        info_residual = math.nan

    rows = []
    for beta in betas:
        probe = fn.scaling_path_probe(spec, state, float(beta))
        analytic = fn.scaling_path_hprime_analytic(spec, state, float(beta))
        i_one = int(np.argmin(np.abs(probe.thetas - 1.0)))
        rel = abs(probe.hprime_numeric - analytic) / max(abs(analytic), 1e-14)
        rows.append({"beta": float(beta), "hprime_numeric": probe.hprime_numeric,
                     "hprime_analytic": analytic, "rel_dev": rel,
                     "h_at_one": float(probe.h_values[i_one]),
                     "stationary_residual": info_residual})

    return ScanReport(kind="pohozaev",
                      columns=("beta", "hprime_numeric", "hprime_analytic",
                               "rel_dev", "h_at_one", "stationary_residual"),
                      rows=tuple(rows),
                      tolerances={"hprime_rel": 1e-3},
                      meta={"problem": spec.kind, "alpha": spec.alpha,
                            "p": spec.p, "rho": spec.rho})
