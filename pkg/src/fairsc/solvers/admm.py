r"""ADMM method for fair spectral clustering with a DC-dualized H-step.

The solver works on the squared-affinity problem

.. math::

    \min_{H, Y} \; \iota_{H^\top H = I}(H) + \iota_{F^\top Y = 0}(Y)
    - \tfrac12 \|M H\|_F^2 \quad \text{s.t.} \quad M H = Y

with augmented Lagrangian penalty ``alpha`` and multiplier ``P``. One
iteration consists of

* the H-step, a difference of convex functions that is solved through its
  dual ``min_V phi*(V) - ||M V||_*`` with L-BFGS, followed by the
  Procrustes recovery ``H = L R^T`` from the SVD ``M V = L S R^T``;
* the Y-step, the projection of ``M H + P / alpha`` onto ``null(F^T)``;
* the multiplier step ``P += alpha (M H - Y)`` and the residual-balancing
  update of ``alpha``.

The dual never needs ``M^2`` explicitly: ``V^T M^2 V`` is formed as
``(M V)^T (M V)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..affinity import apply_M
from ..errors import ContractError
from ..numerics import gaussian_matrix, lbfgs_minimize, make_rng, thin_svd
from .base import EmbeddingResult, check_k

__all__ = [
    "AdmmState",
    "DualObjective",
    "HStep",
    "h_subproblem",
    "primal_recovery",
    "y_subproblem",
    "penalty_update",
    "solve_admm_dc",
]


@dataclass
class AdmmState:
    H: np.ndarray
    Y: np.ndarray
    P: np.ndarray
    alpha: float
    iteration: int = 0
    residual_primal: float = np.inf
    residual_dual: float = np.inf
    V: np.ndarray | None = None
    trace: list = field(default_factory=list)

    @classmethod
    def zeros(cls, n, k, alpha):
        z = np.zeros((n, k))
        return cls(z, z.copy(), z.copy(), alpha)


class DualObjective:
    """Dual objective ``psi(V) = phi*(V) - g*(M V)`` of the H-step.

    ``phi(X) = 1/2 ||X||^2 - <P, X> - alpha/2 ||X - Y||^2`` and ``g`` is the
    indicator of the Stiefel manifold, whose conjugate at ``M V`` is the
    nuclear norm ``Tr sqrt(V^T M^2 V)``.
    """

    def __init__(self, model, P, Y, alpha, eig_floor=1e-12):
        if not 0.0 < alpha < 1.0:
            raise ContractError("the H-step needs 0 < alpha < 1")
        self.model = model
        self.P = P
        self.Y = Y
        self.alpha = alpha
        self.eig_floor = eig_floor
        self.n_evals = 0

    def argmax_point(self, V):
        """``A(V) = (V + P - alpha Y) / (1 - alpha)``, the gradient of ``phi*``."""
        return (V + self.P - self.alpha * self.Y) / (1.0 - self.alpha)

    def phi_star(self, V):
        A = self.argmax_point(V)
        a = self.alpha
        val = (0.5 * np.sum(V * V) - 0.5 * np.sum((A - V) ** 2)
               + 0.5 * a * np.sum((A - self.Y) ** 2) + np.sum(self.P * A))
        return float(val), A

    def g_star(self, V):
        """``Tr sqrt(V^T M^2 V)`` and its gradient ``M (M V) (V^T M^2 V)^{-1/2}``."""
        MV = apply_M(self.model, V)
        S = MV.T @ MV
        S = 0.5 * (S + S.T)
        w, U = np.linalg.eigh(S)
        val = float(np.sum(np.sqrt(np.maximum(w, 0.0))))
        floor = self.eig_floor * max(float(w[-1]), 1.0) if w.size else self.eig_floor
        inv = 1.0 / np.sqrt(np.maximum(w, floor))
        polar = MV @ ((U * inv) @ U.T)
        return val, apply_M(self.model, polar)

    def __call__(self, V):
        self.n_evals += 1
        f1, g1 = self.phi_star(V)
        f2, g2 = self.g_star(V)
        return f1 - f2, g1 - g2


@dataclass
class HStep:
    H: np.ndarray
    V: np.ndarray
    dual_value: float
    lbfgs_iterations: int
    lbfgs_evals: int
    lbfgs_status: str
    rank_deficient: bool


def primal_recovery(V_hat, model, return_singular_values=False):
    """Maximize ``<V_hat, M H>`` over ``H^T H = I``: ``H = L R^T`` with ``M V_hat = L S R^T``."""
    MV = apply_M(model, V_hat)
    L, S, R = thin_svd(MV)
    H = L @ R.T
    if return_singular_values:
        return H, S
    return H


def h_subproblem(state, model, cfg, rng=None, V0=None):
    """Solve the H-step by minimizing its dual with L-BFGS.

    Starts from ``V0`` when given, otherwise from a standard normal matrix.
    """
    n, k = state.H.shape
    if V0 is None:
        V0 = gaussian_matrix(make_rng(cfg.seed if rng is None else rng), n, k)
    dual = DualObjective(model, state.P, state.Y, state.alpha, cfg.eig_floor)
    res = lbfgs_minimize(dual, V0, cfg.lbfgs)
    H, S = primal_recovery(res.x, model, return_singular_values=True)
    deficient = bool(S[-1] <= 1e-12 * max(S[0], 1e-300))
    return HStep(H, res.x, res.f, res.iterations, res.n_evals, res.status, deficient)


def y_subproblem(state, model, fc, MH=None):
    """Closed-form Y-step: project ``M H + P / alpha`` onto ``null(F^T)``.

    Equivalent to ``Q (Q^T M H + Q^T P / alpha)`` for an orthonormal
    nullspace basis ``Q``, evaluated with the range basis instead so ``Q``
    is never formed.
    """
    if not state.alpha > 0:
        raise ContractError("alpha must be positive")
    if MH is None:
        MH = apply_M(model, state.H)
    return fc.project(MH + state.P / state.alpha)


def penalty_update(state, cfg):
    """Residual balancing: grow alpha when the primal residual dominates, shrink it
    when the dual residual does. alpha never reaches 1."""
    r, s, a = state.residual_primal, state.residual_dual, state.alpha
    if r > cfg.mu * s:
        grown = a * cfg.tau
        return grown if grown < 1.0 else a
    if s > cfg.mu * r:
        return a / cfg.tau
    return a


def solve_admm_dc(model, fc, cfg, rng=None):
    """Run the ADMM method from ``H = Y = P = 0``.

    Stops after ``cfg.T`` rounds or once both residual norms drop below
    ``cfg.stop_threshold(n)``. The per-iteration trace records the
    objective ``Tr(H^T M H)``, residuals, penalty and dual solver effort.
    """
    t0 = time.perf_counter()
    check_k(cfg.k, model, fc)
    rng = make_rng(cfg.seed if rng is None else rng)
    n, k = model.n, cfg.k
    stop = cfg.stop_threshold(n)
    state = AdmmState.zeros(n, k, cfg.alpha0)
    flags = set()
    for i in range(cfg.T):
        step = h_subproblem(state, model, cfg, rng, V0=state.V)
        if step.lbfgs_status == "linesearch_failed":
            flags.add("dual_linesearch_failed")
        if step.rank_deficient:
            flags.add("rank_deficient_recovery")
        alpha = state.alpha
        state.H = step.H
        state.V = step.V
        MH = apply_M(model, step.H)
        Y_new = y_subproblem(state, model, fc, MH)
        R = MH - Y_new
        S = alpha * (state.Y - Y_new)
        state.P = state.P + alpha * R
        state.Y = Y_new
        state.residual_primal = float(np.linalg.norm(R))
        state.residual_dual = float(np.linalg.norm(S))
        state.iteration = i + 1
        state.alpha = penalty_update(state, cfg)
        state.trace.append({
            "iteration": i + 1,
            "alpha": alpha,
            "alpha_next": state.alpha,
            "objective": float(np.sum(step.H * MH)),
            "dual_value": step.dual_value,
            "residual_primal": state.residual_primal,
            "residual_dual": state.residual_dual,
            "fairness_residual": float(np.sum((fc.F.T @ step.H) ** 2)),
            "lbfgs_iterations": step.lbfgs_iterations,
            "lbfgs_evals": step.lbfgs_evals,
            "lbfgs_status": step.lbfgs_status,
        })
        if max(state.residual_primal, state.residual_dual) <= stop:
            break
    wall = time.perf_counter() - t0
    H = state.H
    status = "ok" if not flags else "flagged"
    return EmbeddingResult(H, H * model.inv_sqrt_degree[:, None], "admm", wall,
                           iterations=state.iteration, trace=state.trace,
                           status=status, flags=sorted(flags))
