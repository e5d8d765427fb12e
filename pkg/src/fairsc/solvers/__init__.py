"""Fair spectral clustering solvers sharing one output contract."""

from .admm import (
    AdmmState,
    DualObjective,
    h_subproblem,
    penalty_update,
    primal_recovery,
    solve_admm_dc,
    y_subproblem,
)
from .base import EmbeddingResult, SolverConfig
from .baselines import lanczos_top, projected_matrix, solve_ofsc, solve_sfsc

SOLVERS = {
    "ofsc": solve_ofsc,
    "sfsc": solve_sfsc,
    "admm": solve_admm_dc,
}

__all__ = [
    "AdmmState",
    "DualObjective",
    "EmbeddingResult",
    "SOLVERS",
    "SolverConfig",
    "h_subproblem",
    "lanczos_top",
    "penalty_update",
    "primal_recovery",
    "projected_matrix",
    "solve_admm_dc",
    "solve_ofsc",
    "solve_sfsc",
    "y_subproblem",
]
