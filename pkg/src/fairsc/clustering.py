"""k-means++ with Lloyd iterations, used to discretize spectral embeddings."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["KmeansConfig", "KmeansResult", "kmeans", "kmeans_pp_init", "lloyd", "indicator_embedding"]


@dataclass(frozen=True)
class KmeansConfig:
    k: int
    max_iters: int = 300
    restarts: int = 10
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be at least 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be at least 1")


@dataclass
class KmeansResult:
    labels: np.ndarray
    inertia: float
    centers: np.ndarray
    n_iter: int
    history: list

    def __iter__(self):
        return iter((self.labels, self.inertia))


def _sq_dists(X, C, x_sq):
    d = x_sq[:, None] - 2.0 * (X @ C.T) + np.sum(C * C, axis=1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_pp_init(X, k, rng):
    """k-means++ seeding: each new center is drawn with probability proportional to D^2."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    chosen = [int(rng.integers(n))]
    centers[0] = X[chosen[0]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _inertia(X, C, labels):
    return float(np.sum((X - C[labels]) ** 2))


def lloyd(X, centers, max_iters=300, tol=1e-8):
    """Lloyd iterations from given centers.

    Empty clusters are re-seeded at the point farthest from its center.
    Returns ``(labels, centers, inertia, n_iter, history)`` where
    ``history`` lists the inertia after each assignment step.
    """
    C = np.array(centers, dtype=float, copy=True)
    k = C.shape[0]
    x_sq = np.sum(X * X, axis=1)
    history = []
    labels = None
    it = 0
    for it in range(1, max_iters + 1):
        D = _sq_dists(X, C, x_sq)
        labels = np.argmin(D, axis=1)
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            dist = np.sum((X - C[labels]) ** 2, axis=1)
            # only move points out of clusters that keep at least one member
            dist[counts[labels] <= 1] = -1.0
            far = int(np.argmax(dist))
            if dist[far] < 0:
                break
            counts[labels[far]] -= 1
            labels[far] = j
            counts[j] = 1
            C[j] = X[far]
        inertia = _inertia(X, C, labels)
        history.append(inertia)
        for j in range(k):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(axis=0)
        if len(history) >= 2:
            prev = history[-2]
            if prev - inertia <= tol * max(prev, 1e-300):
                break
    inertia = _inertia(X, C, labels)
    if inertia <= history[-1]:
        history.append(inertia)
    return labels, C, history[-1], it, history


def kmeans(rows, cfg):
    """Best-of-``restarts`` k-means++ clustering of the rows of a matrix.

    Each restart uses its own seed spawned from ``cfg.seed``.
    """
    X = np.asarray(rows, dtype=float)
    n = X.shape[0]
    if n < cfg.k:
        raise ValidationError(f"cannot form {cfg.k} clusters from {n} points")
    best = None
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        C0 = kmeans_pp_init(X, cfg.k, rng)
        labels, C, inertia, it, hist = lloyd(X, C0, cfg.max_iters, cfg.tol)
        if best is None or inertia < best.inertia:
            best = KmeansResult(labels, inertia, C, it, hist)
    return best


def indicator_embedding(labels, k):
    """Cluster indicator with columns scaled to unit norm (``1 / sqrt(|C_l|)``).

    Empty clusters give zero columns and a warning.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValidationError(f"labels must lie in [0, {k})")
    counts = np.bincount(labels, minlength=k).astype(float)
    Hhat = np.zeros((labels.size, k))
    Hhat[np.arange(labels.size), labels] = 1.0
    nonempty = counts > 0
    Hhat[:, nonempty] /= np.sqrt(counts[nonempty])
    if not nonempty.all():
        warnings.warn(f"{int((~nonempty).sum())} empty clusters", RuntimeWarning, stacklevel=2)
    return Hhat
