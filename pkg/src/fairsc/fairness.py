"""Group-fairness linear constraints for spectral embeddings.

A clustering is group fair when every cluster reproduces the population
proportions of each group. With group indicator ``G`` and group fractions
``z = G^T 1 / n``, the centered indicator ``F0 = G - 1 z^T`` annihilates
exactly the fair cluster indicators. In the normalized embedding space the
constraint reads ``F^T H = 0`` with ``F = D^{-1/2} F0``; the last column of
``F`` is dropped since the columns of ``F0`` are linearly dependent.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import ContractError, ValidationError
from .numerics import thin_svd

__all__ = [
    "FairnessConstraint",
    "group_indicator",
    "build_constraint",
    "nullspace_basis",
    "range_basis",
    "fairness_residual",
]

RANK_CUTOFF = 1e-10


def group_indicator(group_labels, h=None):
    labels = np.asarray(group_labels, dtype=np.int64)
    if h is None:
        h = int(labels.max()) + 1 if labels.size else 0
    if labels.size and (labels.min() < 0 or labels.max() >= h):
        raise ValidationError(f"group labels must lie in [0, {h})")
    G = np.zeros((labels.size, h))
    G[np.arange(labels.size), labels] = 1.0
    return G


def _rank_and_basis(F):
    if F.shape[1] == 0:
        return 0, np.zeros((F.shape[0], 0))
    L, S, _ = thin_svd(F)
    r = int(np.sum(S > RANK_CUTOFF * S[0])) if S.size and S[0] > 0 else 0
    return r, L[:, :r]


def range_basis(F):
    """Orthonormal basis of the column space of ``F``."""
    F = np.asarray(F, dtype=float)
    return _rank_and_basis(F)[1]


def nullspace_basis(F):
    """Orthonormal basis ``Q`` of ``null(F^T)``, shape ``(n, n - rank(F))``.

    Singular values below ``1e-10`` times the largest are treated as zero.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ContractError("F must be 2-D")
    n, m = F.shape
    if m == 0:
        return np.eye(n)
    if m >= n:
        raise ContractError("F must have fewer columns than rows")
    U, S, _ = np.linalg.svd(F, full_matrices=True)
    r = int(np.sum(S > RANK_CUTOFF * S[0])) if S[0] > 0 else 0
    return U[:, r:].copy()


class FairnessConstraint:
    """Fairness constraint data for one dataset and one degree vector.

    Attributes
    ----------
    G : ndarray (n, h)
        Group indicator.
    z : ndarray (h,)
        Group fractions.
    F0 : ndarray (n, h)
        Centered indicator ``G - 1 z^T``.
    F : ndarray (n, h-1)
        ``D^{-1/2} F0`` without its last column.
    U : ndarray (n, rank F)
        Orthonormal basis of ``range(F)``; ``I - U U^T`` projects onto
        ``null(F^T)``.
    Q : ndarray (n, n - rank F)
        Orthonormal basis of ``null(F^T)``, computed on first access and
        cached.
    """

    def __init__(self, group_labels, degree, h=None):
        labels = np.asarray(group_labels, dtype=np.int64)
        degree = np.asarray(degree, dtype=float)
        if labels.ndim != 1 or degree.shape != labels.shape:
            raise ContractError("group labels and degrees must be 1-D of equal length")
        if np.any(degree <= 0):
            raise ValidationError("degrees must be positive")
        G = group_indicator(labels, h)
        counts = G.sum(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValidationError(f"group {int(empty[0])} has no members")
        n, h = G.shape
        self.group_labels = labels
        self.h = h
        self.n = n
        self.G = G
        self.z = counts / n
        self.F0 = G - np.outer(np.ones(n), self.z)
        self.dropped_group = h - 1
        self.F = (self.F0 / np.sqrt(degree)[:, None])[:, : h - 1]
        self.rank, self.U = _rank_and_basis(self.F)

    @cached_property
    def Q(self):
        return nullspace_basis(self.F)

    def project(self, X):
        """Orthogonal projection of ``X`` onto ``null(F^T)``."""
        if self.U.shape[1] == 0:
            return np.array(X, dtype=float, copy=True)
        return X - self.U @ (self.U.T @ X)


def build_constraint(group_labels, degree, h=None):
    """Build the :class:`FairnessConstraint` for labels and degree vector."""
    return FairnessConstraint(group_labels, degree, h)


def fairness_residual(F, H):
    """Squared Frobenius norm of ``F^T H``."""
    F = np.asarray(F, dtype=float)
    H = np.asarray(H, dtype=float)
    if F.shape[0] != H.shape[0]:
        raise ContractError("F and H must have the same number of rows")
    return float(np.sum((F.T @ H) ** 2))
