"""Fairness and clustering quality metrics."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .affinity import apply_M
from .clustering import indicator_embedding
from .fairness import fairness_residual

__all__ = [
    "MetricBundle",
    "balance",
    "balance_per_cluster",
    "average_balance",
    "min_balance",
    "clustering_cost",
    "embedding_cost",
    "orthogonality_residual",
    "compute_metrics",
]


def balance(cluster_members, group_labels, h):
    """Balance of one cluster: ``min_{s != s'} |V_s & C| / |V_s' & C|``.

    ``cluster_members`` is an index array or boolean mask. Returns 0 when
    a group is missing from the cluster (or the cluster is empty, with a
    warning) and 1 when ``h == 1``.
    """
    groups = np.asarray(group_labels)[cluster_members]
    if groups.size == 0:
        warnings.warn("balance of an empty cluster is taken as 0", RuntimeWarning, stacklevel=2)
        return 0.0
    if h <= 1:
        return 1.0
    counts = np.bincount(groups, minlength=h)
    if counts.min() == 0:
        return 0.0
    return float(counts.min() / counts.max())


def balance_per_cluster(labels, group_labels, k, h):
    labels = np.asarray(labels)
    group_labels = np.asarray(group_labels)
    out = np.zeros(k)
    for l in range(k):
        members = labels == l
        if not members.any():
            continue  # empty cluster counts as 0
        out[l] = balance(members, group_labels, h)
    return out


def average_balance(labels, group_labels, k, h):
    """Mean balance over the ``k`` clusters (empty clusters count as 0)."""
    return float(balance_per_cluster(labels, group_labels, k, h).mean())


def min_balance(labels, group_labels, k, h):
    return float(balance_per_cluster(labels, group_labels, k, h).min())


def embedding_cost(H, model):
    """``Tr(H^T M H)``."""
    return float(np.sum(H * apply_M(model, H)))


def clustering_cost(Hhat, model):
    """``Tr(Hhat^T M Hhat)`` for a normalized cluster indicator."""
    return embedding_cost(Hhat, model)


def orthogonality_residual(H):
    """``||H^T H - I||_F^2``."""
    k = H.shape[1]
    return float(np.sum((H.T @ H - np.eye(k)) ** 2))


@dataclass
class MetricBundle:
    balance_per_cluster: list
    average_balance: float
    min_balance: float
    clustering_cost: float
    embedding_cost: float
    fairness_residual: float
    orthogonality_residual: float
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def compute_metrics(labels, H, model, fc, k, wall_time_s=0.0):
    """All reported metrics for a solver embedding and its k-means labels."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        per = balance_per_cluster(labels, fc.group_labels, k, fc.h)
        Hhat = indicator_embedding(labels, k)
    return MetricBundle(
        balance_per_cluster=per.tolist(),
        average_balance=float(per.mean()),
        min_balance=float(per.min()),
        clustering_cost=clustering_cost(Hhat, model),
        embedding_cost=embedding_cost(H, model),
        fairness_residual=fairness_residual(fc.F, H),
        orthogonality_residual=orthogonality_residual(H),
        wall_time_s=wall_time_s,
    )
