"""Configuration and result types shared by the Fair SC solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..numerics import LbfgsConfig


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``alpha0``, ``T``, ``tau`` and ``mu`` drive the ADMM method;
    ``sfsc_method`` picks the eigensolver of the projected baseline
    (``"dense"`` or ``"lanczos"``). ``residual_stop=None`` resolves to
    ``1e-6 * sqrt(n * k)`` at solve time.

    The dual L-BFGS runs with ``ftol=1e-5``. Warm-started H-steps begin
    close to their optimum, and the looser ``1e-4`` ends them after one
    step, which leaves the multiplier updates unanswered.
    """

    k: int
    alpha0: float = 0.005
    T: int = 10
    tau: float = 2.0
    mu: float = 10.0
    eig_floor: float = 1e-12
    lbfgs: LbfgsConfig = field(default_factory=lambda: LbfgsConfig(ftol=1e-5))
    residual_stop: float | None = None
    seed: int = 0
    sfsc_method: str = "dense"
    lanczos_tol: float = 1e-10
    lanczos_max_dim: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be at least 1")
        if not 0.0 < self.alpha0 < 1.0:
            raise ValidationError("alpha0 must lie in (0, 1)")
        if self.tau <= 1.0 or self.mu <= 1.0:
            raise ValidationError("tau and mu must exceed 1")
        if self.T < 1:
            raise ValidationError("T must be at least 1")
        if self.sfsc_method not in ("dense", "lanczos"):
            raise ValidationError(f"unknown sfsc_method {self.sfsc_method!r}")

    def stop_threshold(self, n):
        if self.residual_stop is not None:
            return self.residual_stop
        return 1e-6 * math.sqrt(n * self.k)


@dataclass
class EmbeddingResult:
    """Output shared by all solvers.

    ``H`` is the orthonormal embedding; k-means runs on
    ``rows_for_kmeans = D^{-1/2} H``.
    """

    H: np.ndarray
    rows_for_kmeans: np.ndarray
    solver_name: str
    wall_time: float
    eigenvalues: np.ndarray | None = None
    iterations: int = 0
    trace: list = field(default_factory=list)
    status: str = "ok"
    flags: list = field(default_factory=list)


def check_k(k, model, fc):
    free = model.n - fc.rank
    if k > free:
        raise ValidationError(f"k={k} exceeds the dimension {free} of the fair subspace")
