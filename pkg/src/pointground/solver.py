"""Mass-constrained minimization over the singular energy space.

Projected gradient descent on the sphere ||u||_{L^2}^2 = rho^2 in the
(phi samples, q) parameterization at fixed gauge: the raw gradient is
preconditioned by the diagonal of the L^2 Gram matrix (turning
coordinate partials into function values), projected L^2-orthogonally
to the state, and followed by an Armijo backtracking line search along
the mass-projected path.  Because the tangent direction is exactly
L^2-orthogonal to the state, the mass rescaling contributes nothing to
the first-order decrease, and the accepted-energy sequence is
monotone.  Initial steps are warmed up Barzilai-Borwein style; every
candidate is clamped back to the sphere before evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import espace as es
from .espace import EnergyState, l2_inner, scale_to_mass
from .functionals import EnergyBreakdown, ProblemSpec, energy, gradient, lagrange_omega
from .green import FOUR_PI, green_l2_norm_sq
from .grid import RadialGrid, derivative_matrix

DEFAULT_SEED_WIDTHS = (0.5, 1.0, 2.0)
DEFAULT_SEED_CHARGE_FRACTIONS = (0.0, 0.1, 1.0)
_MAX_BACKTRACKS = 60

_precond_cache: dict = {}


def _preconditioner(grid: RadialGrid, gauge: float):
    """Factorized Sobolev metric 4 pi D^T w D + diag(4 pi w (1 + lam)).

    Explicit L^2 gradient flow is unconditionally impractical here: the
    log grid resolves radii down to r_min, so the Dirichlet operator's
    top eigenvalue scales like (r_min log_step)^{-2}.  Solving the
    (-Delta + const)-like metric once per run turns the descent into a
    preconditioned gradient flow with grid-independent step sizes.
    """
    key = (id(grid), grid.n, gauge)
    hit = _precond_cache.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    from scipy.sparse import diags
    from scipy.sparse.linalg import splu

    d = derivative_matrix(grid)
    w = grid.weights
    a = FOUR_PI * (d.T.multiply(w) @ d) + diags(FOUR_PI * w * (1.0 + gauge))
    lu = splu(a.tocsc())
    _precond_cache[key] = (grid, lu)
    return lu


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for a single descent run and the multistart family."""

    max_iter: int = 50_000
    grad_tol: float = 1e-8          # scaled by (1 + |energy|) at runtime
    step0: float = 1.0
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    restarts: tuple = (DEFAULT_SEED_WIDTHS, DEFAULT_SEED_CHARGE_FRACTIONS)
    seed: int = 0
    record_history: bool = False    # keep (energy, h_alpha + mass) per accepted iterate

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not (0.0 < self.armijo_c < 1.0):
            raise ValueError("armijo_c must lie in (0, 1)")
        if not (0.0 < self.armijo_shrink < 1.0):
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if not (self.grad_tol > 0.0):
            raise ValueError("grad_tol must be positive")
        if not (self.step0 > 0.0):
            raise ValueError("step0 must be positive")


@dataclass(frozen=True)
class GroundStateResult:
    state: EnergyState
    energy: EnergyBreakdown
    omega: float
    grad_residual: float
    iterations: int
    converged: bool
    start_id: int = 0
    message: str = ""
    history: tuple = ()


class MultistartError(RuntimeError):
    """Raised when every start diverged; carries per-start diagnostics."""

    def __init__(self, diagnostics: list):
        super().__init__("all multistart runs failed to converge")
        self.diagnostics = diagnostics


def project_tangent(state: EnergyState, direction: tuple[np.ndarray, float]) -> tuple[np.ndarray, float]:
    """Remove the mass-constraint normal: d - (<d|u>_{L^2}/||u||^2) u.

    The output, read as the function d_phi + d_q G_lam, is L^2-orthogonal
    to the state.
    """
    m2 = es.mass_sq(state)
    if m2 <= 0.0:
        raise ValueError("cannot project at the zero state")
    dphi, dq = direction
    coef = l2_inner(state.grid, state.gauge, dphi, dq, state.phi, state.charge) / m2
    return dphi - coef * state.phi, dq - coef * state.charge


def _tangent_norm(state: EnergyState, direction: tuple[np.ndarray, float]) -> float:
    dphi, dq = direction
    sq = l2_inner(state.grid, state.gauge, dphi, dq, dphi, dq)
    return math.sqrt(max(sq, 0.0))


def _mass_normal(state: EnergyState) -> tuple[np.ndarray, float]:
    """Half the coordinate gradient of mass_sq: the constraint normal."""
    from .espace import _cross_kernel

    cvec = _cross_kernel(state.grid, state.gauge)
    nphi = FOUR_PI * state.grid.weights * state.phi + state.charge * cvec
    nq = float(cvec @ state.phi) + state.charge * green_l2_norm_sq(state.gauge)
    return nphi, nq


def _descent_direction(state, gphi, gq, lu, mq, fix_q_zero):
    """Preconditioned gradient, orthogonalized against the constraint
    normal in the preconditioner metric.

    d = M^{-1} (g - nu n) with nu = <n, M^{-1} g> / <n, M^{-1} n> keeps
    <d | u>_{L^2} = 0 exactly while g . d >= 0 by Cauchy-Schwarz, so the
    direction is simultaneously mass-tangent and a descent direction.
    """
    pg_phi = lu.solve(gphi)
    pg_q = 0.0 if fix_q_zero else gq / mq
    nphi, nq = _mass_normal(state)
    if fix_q_zero:
        nq = 0.0
    pn_phi = lu.solve(nphi)
    pn_q = 0.0 if fix_q_zero else nq / mq
    denom = float(nphi @ pn_phi) + nq * pn_q
    if denom <= 0.0:
        raise ValueError("degenerate constraint normal")
    nu = (float(nphi @ pg_phi) + nq * pg_q) / denom
    dphi = pg_phi - nu * pn_phi
    dq = pg_q - nu * pn_q
    slope = float(gphi @ dphi) + gq * dq
    return (dphi, dq), slope


def minimize(spec: ProblemSpec, options: SolveOptions, initial: EnergyState,
             fix_q_zero: bool = False, start_id: int = 0) -> GroundStateResult:
    """Projected-gradient descent from one initial state.

    fix_q_zero pins the charge to zero throughout, targeting the
    classical problem on W^{1,2}; otherwise q is an ordinary unknown.
    The returned state always satisfies the mass constraint; converged
    means the L^2 norm of the projected gradient fell below
    grad_tol * (1 + |energy|).
    """
    g = initial.grid
    if fix_q_zero and initial.charge != 0.0:
        initial = replace(initial, charge=0.0)
    if es.mass_sq(initial) <= 0.0:
        raise ValueError("initial state must be nonzero")
    x = scale_to_mass(initial, spec.rho)

    lu = _preconditioner(g, x.gauge)
    mq = spec.alpha + math.sqrt(x.gauge) / (8.0 * math.pi)
    e_val = energy(spec, x).total
    if not math.isfinite(e_val):
        return _finish(spec, x, math.inf, 0, False, start_id, "non-finite initial energy")

    step = options.step0
    prev = None  # (phi, q, gphi, gq) of the previous accepted iterate
    iterations = 0
    message = "max_iter reached"
    converged = False
    residual = math.inf
    history = []
    if options.record_history:
        history.append((e_val, es.h_alpha(x, spec.alpha) + es.mass_sq(x)))

    while iterations < options.max_iter:
        iterations += 1
        gphi, gq = gradient(spec, x)
        if fix_q_zero:
            gq = 0.0
        d, slope = _descent_direction(x, gphi, gq, lu, mq, fix_q_zero)
        residual = _tangent_norm(x, d)
        if residual <= options.grad_tol * (1.0 + abs(e_val)):
            converged = True
            message = "projected gradient below tolerance"
            break
        if slope <= 0.0:
            # g is parallel to the constraint normal up to roundoff
            message = "stationary direction within roundoff"
            converged = False
            break

        if prev is not None:
            dxphi = x.phi - prev[0]
            dxq = x.charge - prev[1]
            dgphi = gphi - prev[2]
            dgq = gq - prev[3]
            denom = float(dxphi @ dgphi) + dxq * dgq
            numer = float(dxphi @ dxphi) + dxq * dxq
            if denom > 0.0 and math.isfinite(denom):
                step = min(max(numer / denom, 1e-10), 1e6)
            else:
                step = min(step * 4.0, 1e6)
        prev = (x.phi, x.charge, gphi, gq)

        accepted = False
        s = step
        for _ in range(_MAX_BACKTRACKS):
            trial_phi = x.phi - s * d[0]
            trial_q = x.charge - s * d[1]
            trial = EnergyState(grid=g, gauge=x.gauge, phi=trial_phi, charge=trial_q)
            if es.mass_sq(trial) <= 0.0:
                s *= options.armijo_shrink
                continue
            trial = scale_to_mass(trial, spec.rho)
            e_trial = energy(spec, trial).total
            if math.isfinite(e_trial) and e_trial <= e_val - options.armijo_c * s * slope:
                x = trial
                e_val = e_trial
                step = s
                accepted = True
                break
            s *= options.armijo_shrink
        if not accepted:
            message = "line search stalled"
            break
        if options.record_history:
            history.append((e_val, es.h_alpha(x, spec.alpha) + es.mass_sq(x)))

    return _finish(spec, x, residual, iterations, converged, start_id, message,
                   tuple(history))


def _finish(spec: ProblemSpec, x: EnergyState, residual: float, iterations: int,
            converged: bool, start_id: int, message: str,
            history: tuple = ()) -> GroundStateResult:
    if x.charge < 0.0:
        x = replace(x, phi=-x.phi, charge=-x.charge)  # global sign flip, same function class
    ebd = energy(spec, x)
    omega = lagrange_omega(spec, x)
    return GroundStateResult(state=x, energy=ebd, omega=omega, grad_residual=residual,
                             iterations=iterations, converged=converged,
                             start_id=start_id, message=message, history=history)


def seed_states(spec: ProblemSpec, grid: RadialGrid,
                options: SolveOptions, fix_q_zero: bool = False) -> list[EnergyState]:
    """Deterministic multistart family: Gaussian widths x charge fractions."""
    widths, q_fracs = options.restarts
    if fix_q_zero:
        q_fracs = (0.0,)
    seeds = []
    for width in widths:
        base = np.exp(-((grid.nodes / width) ** 2))
        bump = EnergyState(grid=grid, gauge=1.0, phi=base, charge=0.0)
        amp = spec.rho / math.sqrt(es.mass_sq(bump))
        for frac in q_fracs:
            raw = EnergyState(grid=grid, gauge=1.0, phi=amp * base, charge=frac * spec.rho)
            seeds.append(scale_to_mass(raw, spec.rho))
    return seeds


def multistart(spec: ProblemSpec, options: SolveOptions, grid: RadialGrid,
               fix_q_zero: bool = False) -> GroundStateResult:
    """Run minimize from every seed and keep the best converged result.

    Ties break by lower grad_residual, then lower start_id.  Raises
    MultistartError (with per-start diagnostics) if nothing converged.
    """
    best = None
    diagnostics = []
    for sid, seed in enumerate(seed_states(spec, grid, options, fix_q_zero)):
        res = minimize(spec, options, seed, fix_q_zero=fix_q_zero, start_id=sid)
        diagnostics.append({"start_id": sid, "converged": res.converged,
                            "energy": res.energy.total, "grad_residual": res.grad_residual,
                            "iterations": res.iterations, "message": res.message})
        if not res.converged:
            continue
        if best is None or (res.energy.total, res.grad_residual, res.start_id) < \
                (best.energy.total, best.grad_residual, best.start_id):
            best = res
    if best is None:
        raise MultistartError(diagnostics)
    return best


# -- serialization -----------------------------------------------------------

def result_to_record(spec: ProblemSpec, result: GroundStateResult,
                     include_phi: bool = False) -> dict:
    record = {
        "problem": spec.kind,
        "alpha": spec.alpha,
        "p": spec.p,
        "rho": spec.rho,
        "energy": result.energy.total,
        "omega": result.omega,
        "q": result.state.charge,
        "grad_residual": result.grad_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "n": result.state.grid.n,
        "r_min": result.state.grid.r_min,
        "r_max": result.state.grid.r_max,
    }
    if include_phi:
        record["phi"] = [float(v) for v in result.state.phi]
    return record


def save_result(spec: ProblemSpec, result: GroundStateResult, path: str,
                include_phi: bool = False) -> None:
    with open(path, "w") as fh:
        json.dump(result_to_record(spec, result, include_phi), fh)


def load_result_record(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
