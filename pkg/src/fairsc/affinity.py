"""Normalized affinity operators for spectral clustering.

For point data the affinity is the RBF kernel ``K`` and the normalized
affinity is ``M = D^{-1/2} K D^{-1/2}``. For graphs with adjacency ``W``
the normalized adjacency is shifted, ``M = D^{-1/2} W D^{-1/2} + (1 + omega) I``,
which keeps every eigenvalue of ``M`` at or above ``omega`` without changing
the eigenvectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ContractError, ValidationError

__all__ = [
    "AffinityModel",
    "rbf_affinity",
    "graph_affinity",
    "apply_M",
    "affinity_for",
    "DEFAULT_OMEGA",
    "DEFAULT_DENSE_THRESHOLD",
]

DEFAULT_OMEGA = 0.01
DEFAULT_DENSE_THRESHOLD = 20000


@dataclass(frozen=True)
class AffinityModel:
    """Normalized affinity ``M`` (symmetric) and the degree vector.

    ``dense_M`` is populated when ``n`` does not exceed the dense threshold;
    otherwise only the operator form is available.
    """

    n: int
    degree: np.ndarray
    omega: float
    kind: str
    matvec: Callable[[np.ndarray], np.ndarray]
    dense_M: np.ndarray | None = None

    def apply(self, X):
        return apply_M(self, X)

    @property
    def inv_sqrt_degree(self):
        return 1.0 / np.sqrt(self.degree)

    def materialize(self):
        """Dense ``M``, built column by column if it was not stored."""
        if self.dense_M is not None:
            return self.dense_M
        M = self.matvec(np.eye(self.n))
        return 0.5 * (M + M.T)


def apply_M(model, X):
    """Exact product ``M @ X`` for ``X`` of shape (n,) or (n, k)."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] != model.n:
        raise ContractError(f"operand has {X.shape[0]} rows, expected {model.n}")
    if model.dense_M is not None:
        return model.dense_M @ X
    return model.matvec(X)


def _warn_duplicates(points):
    uniq = np.unique(points, axis=0)
    if uniq.shape[0] < points.shape[0]:
        warnings.warn(
            f"{points.shape[0] - uniq.shape[0]} duplicate points: the affinity "
            "matrix is rank deficient",
            RuntimeWarning,
            stacklevel=3,
        )


def rbf_affinity(points, gamma=None, dense_threshold=DEFAULT_DENSE_THRESHOLD, block=2048):
    """Normalized RBF affinity ``K_ij = exp(-gamma ||x_i - x_j||^2)``.

    ``gamma`` defaults to ``1 / d``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ContractError("points must be a non-empty 2-D array")
    n, d = X.shape
    if gamma is None:
        gamma = 1.0 / d
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    _warn_duplicates(X)

    if n <= dense_threshold:
        K = np.exp(-gamma * cdist(X, X, "sqeuclidean"))
        deg = K.sum(axis=1)
        s = 1.0 / np.sqrt(deg)
        M = K * s[:, None] * s[None, :]
        M = 0.5 * (M + M.T)

        def matvec(V):
            return M @ V

        return AffinityModel(n, deg, 0.0, "kernel", matvec, M)

    def kernel_times(V):
        out = np.empty((n,) + V.shape[1:])
        for start in range(0, n, block):
            rows = slice(start, min(start + block, n))
            out[rows] = np.exp(-gamma * cdist(X[rows], X, "sqeuclidean")) @ V
        return out

    deg = kernel_times(np.ones(n))
    s = 1.0 / np.sqrt(deg)

    def matvec(V):
        scale = s if V.ndim == 1 else s[:, None]
        return scale * kernel_times(scale * V)

    return AffinityModel(n, deg, 0.0, "kernel", matvec, None)


def graph_affinity(adjacency, omega=DEFAULT_OMEGA, dense_threshold=DEFAULT_DENSE_THRESHOLD):
    """Shifted normalized adjacency ``D^{-1/2} W D^{-1/2} + (1 + omega) I``."""
    W = np.asarray(adjacency, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ContractError("adjacency must be square")
    if not omega > 0:
        raise ValidationError("omega must be positive")
    if np.any(W < 0):
        raise ValidationError("adjacency must be nonnegative")
    if not np.allclose(W, W.T, rtol=0, atol=1e-12 * max(np.abs(W).max(initial=0), 1)):
        raise ValidationError("adjacency must be symmetric")
    n = W.shape[0]
    deg = W.sum(axis=1)
    isolated = np.flatnonzero(deg <= 0)
    if isolated.size:
        raise ValidationError(f"node {int(isolated[0])} has zero degree")
    s = 1.0 / np.sqrt(deg)
    shift = 1.0 + omega

    if n <= dense_threshold:
        M = W * s[:, None] * s[None, :]
        M = 0.5 * (M + M.T)
        M[np.diag_indices(n)] += shift

        def matvec(V):
            return M @ V

        return AffinityModel(n, deg, omega, "graph", matvec, M)

    def matvec(V):
        scale = s if V.ndim == 1 else s[:, None]
        return scale * (W @ (scale * V)) + shift * V

    return AffinityModel(n, deg, omega, "graph", matvec, None)


def affinity_for(bundle, gamma=None, omega=DEFAULT_OMEGA, dense_threshold=DEFAULT_DENSE_THRESHOLD):
    """Affinity model matching the kind of a :class:`DatasetBundle`."""
    if bundle.kind == "points":
        return rbf_affinity(bundle.points, gamma, dense_threshold)
    return graph_affinity(bundle.adjacency, omega, dense_threshold)
