"""The singular energy space: states u = phi + q G_lam and their forms.

A state is stored as (gauge lam, samples of the regular part phi, charge
q) on a RadialGrid.  The decomposition is not unique: regauging to mu
replaces phi by phi + q (G_lam - G_mu) and leaves the function u, its
mass and the quadratic form unchanged.  All optimization happens at a
fixed working gauge (lam = 1 by default); regauging exists for the
invariance checks.

The quadratic form of the point interaction with strength alpha >= 0 is

    H_alpha(u) = ||phi||_{W^{1,2}dot}^2
                 + lam (||phi||_{L^2}^2 - ||u||_{L^2}^2)
                 + (alpha + sqrt(lam)/(4 pi)) q^2,

nonnegative and vanishing only at u = 0.  States are real with the
phase freedom removed; ground states can further be normalized to
q >= 0, which the solver does on its results (iterates may pass
through q < 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import roots_jacobi

from . import grid as gridmod
from .green import FOUR_PI, green_diff_eval, green_eval, green_l2_norm_sq
from .grid import RadialGrid, differentiate, eval_at_zero, integrate

EPSILON_GAUGE = 1.0 / (8.0 * math.pi) ** 2  # canonical-gauge constant

_LP_TAIL_NODES = 8
_jacobi_cache: dict = {}


@dataclass(frozen=True)
class EnergyState:
    """A point of the energy space: u = phi + charge * G_gauge on grid."""

    grid: RadialGrid
    gauge: float
    phi: np.ndarray
    charge: float

    def __post_init__(self) -> None:
        if not (0.0 < self.gauge < math.inf):
            raise ValueError(f"gauge must be positive and finite, got {self.gauge}")
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (self.grid.n,):
            raise ValueError("phi sample length does not match the grid")
        if not math.isfinite(self.charge):
            raise ValueError(f"charge must be finite, got {self.charge}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "gauge", float(self.gauge))
        object.__setattr__(self, "charge", float(self.charge))

    def u_samples(self) -> np.ndarray:
        """Samples of the full function u at the grid nodes."""
        return self.phi + self.charge * green_eval(self.gauge, self.grid.nodes)

    def is_regular(self) -> bool:
        """True iff the state lies in W^{1,2} (charge q = 0)."""
        return self.charge == 0.0


def zero_state(grid: RadialGrid, gauge: float = 1.0) -> EnergyState:
    return EnergyState(grid=grid, gauge=gauge, phi=np.zeros(grid.n), charge=0.0)


def _cross_kernel(grid: RadialGrid, lam: float) -> np.ndarray:
    """Vector c with c . phi = <phi | G_lam>_{L^2} under the grid quadrature."""
    return grid.weights * np.exp(-math.sqrt(lam) * grid.nodes) / grid.nodes


def l2_inner(grid: RadialGrid, lam: float, phi_a: np.ndarray, q_a: float,
             phi_b: np.ndarray, q_b: float) -> float:
    """L^2 inner product of two states sharing the gauge lam.

    The G-G block uses the exact closed form; cross terms use grid
    quadrature.
    """
    c = _cross_kernel(grid, lam)
    val = FOUR_PI * integrate(grid, phi_a * phi_b)
    val += q_b * float(c @ phi_a) + q_a * float(c @ phi_b)
    val += q_a * q_b * green_l2_norm_sq(lam)
    return val


def _gauge_floor(grid: RadialGrid) -> float:
    """Smallest gauge whose Green function has decayed by r_max (1e-12)."""
    return (27.63 / grid.r_max) ** 2


def mass_sq(state: EnergyState) -> float:
    """||u||_{L^2}^2 expanded through the decomposition.

    For gauges so small that G_gauge has not decayed by r_max, the
    expansion is evaluated in a truncation-safe reference gauge first;
    the value is gauge-invariant, the quadrature error is not.
    """
    lam = state.gauge
    floor = _gauge_floor(state.grid)
    if lam < floor and state.charge != 0.0:
        state = regauge(state, max(1.0, floor))
    return l2_inner(state.grid, state.gauge, state.phi, state.charge,
                    state.phi, state.charge)


def dirichlet_sq(grid: RadialGrid, phi: np.ndarray) -> float:
    """||phi||_{W^{1,2}dot}^2 = 4 pi int (phi')^2 r^2 dr."""
    dphi = differentiate(grid, phi)
    return FOUR_PI * integrate(grid, dphi * dphi)


def h_alpha(state: EnergyState, alpha: float) -> float:
    """Quadratic form of the point interaction; >= 0 for alpha >= 0."""
    lam = state.gauge
    q = state.charge
    w12 = dirichlet_sq(state.grid, state.phi)
    phi_l2 = FOUR_PI * integrate(state.grid, state.phi * state.phi)
    return (w12 + lam * (phi_l2 - mass_sq(state))
            + (alpha + math.sqrt(lam) / FOUR_PI) * q * q)


def s_alpha(u: EnergyState, v: EnergyState, alpha: float) -> float:
    """Polarized form: s_alpha(u, u) = h_alpha(u).  Real states only."""
    if u.grid is not v.grid and u.grid.descriptor() != v.grid.descriptor():
        raise ValueError("states must share a grid")
    if v.gauge != u.gauge:
        v = regauge(v, u.gauge)
    g = u.grid
    lam = u.gauge
    du = differentiate(g, u.phi)
    dv = differentiate(g, v.phi)
    w12 = FOUR_PI * integrate(g, du * dv)
    phi_pair = FOUR_PI * integrate(g, u.phi * v.phi)
    uv = l2_inner(g, lam, u.phi, u.charge, v.phi, v.charge)
    return (w12 + lam * (phi_pair - uv)
            + (alpha + math.sqrt(lam) / FOUR_PI) * u.charge * v.charge)


def regauge(state: EnergyState, mu: float) -> EnergyState:
    """Rewrite the state at gauge mu; u, mass and h_alpha are unchanged."""
    if not (0.0 < mu < math.inf):
        raise ValueError(f"target gauge must be positive and finite, got {mu}")
    if mu == state.gauge:
        return state
    shift = state.charge * green_diff_eval(state.gauge, mu, state.grid.nodes)
    return replace(state, gauge=float(mu), phi=state.phi + shift)


def h_alpha_closed_gauge(state: EnergyState, alpha: float) -> float:
    """Gauge-free closed form of H_alpha, valid off W^{1,2} (q != 0).

    Regauges to lam* = eps q^4 / ||u||^4 with eps = 1/(8 pi)^2 and
    evaluates

        ||phi*||^2 + (q^4 / (8 pi ||u||)^2) (1 + ||phi*||_{L^2}^2/||u||^2)
                   + alpha q^2.
    """
    q = state.charge
    if q == 0.0:
        raise ValueError("closed-gauge form requires charge q != 0")
    m2 = mass_sq(state)
    lam_star = EPSILON_GAUGE * q ** 4 / m2 ** 2
    star = regauge(state, lam_star)
    w12 = dirichlet_sq(star.grid, star.phi)
    phi_l2 = FOUR_PI * integrate(star.grid, star.phi * star.phi)
    return (w12 + q ** 4 / (8.0 * math.pi) ** 2 / m2 * (1.0 + phi_l2 / m2)
            + alpha * q * q)


def h_alpha_star_gauge(state: EnergyState, alpha: float) -> float:
    """Generic H_alpha evaluated after regauging to the canonical gauge.

    Companion of h_alpha_closed_gauge: the two must agree up to
    quadrature error.
    """
    q = state.charge
    if q == 0.0:
        raise ValueError("canonical gauge requires charge q != 0")
    m2 = mass_sq(state)
    lam_star = EPSILON_GAUGE * q ** 4 / m2 ** 2
    return h_alpha(regauge(state, lam_star), alpha)


def _lp_tail(state: EnergyState, p: float, with_grad: bool = False):
    """Analytic contribution of [0, r_min) to 4 pi int |u|^p r^2 dr.

    On [0, r_min) write 4 pi |u|^p r^2 = r^{2-p} psi(r)^p with the
    smooth factor psi(r) = |q e^{-sqrt(lam) r}/(4 pi) + r phi(r)|; phi
    is modeled by its quadratic extrapolation through the three
    smallest nodes.  Gauss-Jacobi quadrature with weight x^{2-p}
    integrates psi^p essentially exactly.  Without this tail, states
    with q != 0 lose up to ~half their L^p mass as p -> 3.
    """
    g = state.grid
    lam = state.gauge
    q = state.charge
    key = (p, _LP_TAIL_NODES)
    if key not in _jacobi_cache:
        xi, wj = roots_jacobi(_LP_TAIL_NODES, 0.0, 2.0 - p)
        _jacobi_cache[key] = ((xi + 1.0) / 2.0, wj * 0.5 ** (3.0 - p))
    x, wx = _jacobi_cache[key]
    r = g.r_min * x

    r1, r2, r3 = g.nodes[:3]
    f1, f2, f3 = state.phi[0], state.phi[1], state.phi[2]
    d12 = (f2 - f1) / (r2 - r1)
    d123 = ((f3 - f2) / (r3 - r2) - d12) / (r3 - r1)
    phi_model = f1 + (r - r1) * d12 + (r - r1) * (r - r2) * d123

    kern = np.exp(-math.sqrt(lam) * r) / FOUR_PI
    psi_signed = q * kern + r * phi_model
    psi = np.abs(psi_signed)
    scale = FOUR_PI * g.r_min ** (3.0 - p)
    value = scale * float(wx @ psi ** p)
    if not with_grad:
        return value

    dpsi = p * psi ** (p - 2.0) * psi_signed  # d|psi|^p / dpsi_signed
    common = scale * wx * dpsi
    dq = float(common @ kern)
    # Lagrange weights of the three stencil nodes at each tail radius
    l1 = (r - r2) * (r - r3) / ((r1 - r2) * (r1 - r3))
    l2 = (r - r1) * (r - r3) / ((r2 - r1) * (r2 - r3))
    l3 = (r - r1) * (r - r2) / ((r3 - r1) * (r3 - r2))
    dphi = np.zeros(g.n)
    dphi[0] = float(common @ (r * l1))
    dphi[1] = float(common @ (r * l2))
    dphi[2] = float(common @ (r * l3))
    return value, dphi, dq


def lp_norm_pow(state: EnergyState, p: float) -> float:
    """||u||_{L^p}^p = 4 pi int |phi + q G_lam|^p r^2 dr for 2 <= p < 3."""
    p = float(p)
    if not (2.0 <= p < 3.0):
        raise ValueError(f"L^p norm defined on the energy space for 2 <= p < 3, got p={p}")
    u = state.u_samples()
    body = FOUR_PI * integrate(state.grid, np.abs(u) ** p)
    return body + _lp_tail(state, p)


def scale_to_mass(state: EnergyState, rho: float) -> EnergyState:
    """Multiply (phi, q) by rho/||u|| so the result has mass rho^2."""
    if not (0.0 < rho < math.inf):
        raise ValueError(f"target mass rho must be positive, got {rho}")
    m2 = mass_sq(state)
    if m2 <= 0.0:
        raise ValueError("cannot project the zero state onto a mass sphere")
    c = rho / math.sqrt(m2)
    return replace(state, phi=state.phi * c, charge=state.charge * c)


def state_phi_at_zero(state: EnergyState) -> float:
    """phi(0) of the regular part (finite for any state in the space)."""
    return eval_at_zero(state.grid, state.phi)


# -- serialization ----------------------------------------------------------

def state_to_record(state: EnergyState) -> dict:
    return {
        "lambda": state.gauge,
        "q": state.charge,
        "n": state.grid.n,
        "r_min": state.grid.r_min,
        "r_max": state.grid.r_max,
        "phi": [float(v) for v in state.phi],
    }


def state_from_record(record: dict) -> EnergyState:
    g = gridmod.build_grid(int(record["n"]), float(record["r_min"]), float(record["r_max"]))
    return EnergyState(grid=g, gauge=float(record["lambda"]),
                       phi=np.asarray(record["phi"], dtype=float),
                       charge=float(record["q"]))


def save_state(state: EnergyState, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_record(state), fh)


def load_state(path: str) -> EnergyState:
    with open(path) as fh:
        return state_from_record(json.load(fh))
