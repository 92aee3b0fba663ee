"""Numerics for the coupled pseudo-relativistic Hartree minimization problem."""
from .appendix import (
    CoupledGS,
    closed_form_coupled_gs,
    coupled_action,
    h_quotient,
    nehari_repair,
    nehari_residual,
)
from .energy import (
    Outcome,
    Params,
    Thresholds,
    Verdict,
    classify,
    estimate_eta,
    eta_bounds,
    gamma,
    j_quotient,
    thresholds,
    total_energy,
)
from .grid import Field, Grid3, make_grid
from .ground_state import GroundState, check_decay, solve_scalar_ground_state, weinstein_quotient
from .io import get_ground_state
from .minimizer import (
    MinimizerOptions,
    MinimizerResult,
    ProbeReport,
    concentration_probe,
    lagrange_multipliers,
    minimize,
    pohozaev_coupled_residual,
    scaling_probe,
)
from .operators import (
    KineticSpec,
    apply_kinetic,
    coulomb_potential,
    hartree_energy,
    kinetic_energy,
    quarter_laplacian_energy,
)

__version__ = "0.1.0"
