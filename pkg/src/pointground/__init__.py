"""Ground states of 3D energy functionals with a nonattractive point interaction.

Mass-constrained minimization of delta-NLSE, delta-Kirchhoff and
delta-Schrodinger-Poisson energies over the singular space of functions
u = phi + q G_lam, plus a verification harness for every closed-form
identity and condition the construction rests on.
"""

from .espace import (EnergyState, h_alpha, h_alpha_closed_gauge, l2_inner,
                     lp_norm_pow, mass_sq, regauge, s_alpha, scale_to_mass,
                     zero_state)
from .functionals import (KIRCHHOFF, NLSE, SCHRODINGER_POISSON, EnergyBreakdown,
                          ProblemSpec, energy, gradient, hartree_b,
                          hartree_potential, lagrange_omega, scaling_path_apply,
                          scaling_path_probe)
from .green import (green_diff_eval, green_eval, green_l2_norm_sq,
                    green_lr_norm_pow, green_pair_inner, green_phi_inner)
from .grid import RadialGrid, build_grid, differentiate, eval_at_zero, integrate
from .solver import (GroundStateResult, MultistartError, SolveOptions, minimize,
                     multistart, project_tangent)
from .verify import (ScanReport, gn_scan, identity_suite, pohozaev_probe,
                     small_mass_scan, subadditivity_scan, vanishing_check)

__version__ = "0.1.0"

__all__ = [
    "EnergyState", "h_alpha", "h_alpha_closed_gauge", "l2_inner", "lp_norm_pow",
    "mass_sq", "regauge", "s_alpha", "scale_to_mass", "zero_state",
    "KIRCHHOFF", "NLSE", "SCHRODINGER_POISSON", "EnergyBreakdown", "ProblemSpec",
    "energy", "gradient", "hartree_b", "hartree_potential", "lagrange_omega",
    "scaling_path_apply", "scaling_path_probe",
    "green_diff_eval", "green_eval", "green_l2_norm_sq", "green_lr_norm_pow",
    "green_pair_inner", "green_phi_inner",
    "RadialGrid", "build_grid", "differentiate", "eval_at_zero", "integrate",
    "GroundStateResult", "MultistartError", "SolveOptions", "minimize",
    "multistart", "project_tangent",
    "ScanReport", "gn_scan", "identity_suite", "pohozaev_probe",
    "small_mass_scan", "subadditivity_scan", "vanishing_check",
]
