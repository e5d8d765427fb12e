"""Synthetic generators and file loaders for fair clustering benchmarks.

Every generator and loader returns a :class:`DatasetBundle`, which holds
either a point cloud or a symmetric adjacency matrix together with group
labels (the protected attribute) and, for synthetic data, ground-truth
clusters.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .numerics import make_rng

__all__ = [
    "DatasetBundle",
    "msbm_edge_probability",
    "gen_msbm",
    "gen_randlaplace",
    "gen_elliptical",
    "load_edge_list",
    "load_feature_csv",
    "write_edge_list",
    "write_groups",
    "write_metadata",
    "write_feature_csv",
    "ELLIPTICAL_CENTERS",
    "ELLIPTICAL_STDS",
]

# Elliptical cloud parameters (centers and per-axis standard deviations).
ELLIPTICAL_CENTERS = np.array([[-3.0, 0.0], [3.0, 0.0]])
ELLIPTICAL_STDS = np.array([[0.5, 1.5], [0.5, 1.5]])
ELLIPTICAL_ANGLES = (math.pi / 6, -math.pi / 6)


@dataclass
class DatasetBundle:
    """A dataset with group labels.

    Exactly one of ``points`` (kind ``"points"``) and ``adjacency`` (kind
    ``"graph"``) is populated.
    """

    kind: str
    group_labels: np.ndarray
    name: str = ""
    points: np.ndarray | None = None
    adjacency: np.ndarray | None = None
    ground_truth: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.group_labels = np.asarray(self.group_labels, dtype=np.int64)
        if self.kind == "points":
            if self.points is None or self.adjacency is not None:
                raise ValidationError("points bundle needs points and no adjacency")
            self.points = np.asarray(self.points, dtype=float)
            if self.points.ndim != 2:
                raise ValidationError("points must be a 2-D array")
        elif self.kind == "graph":
            if self.adjacency is None or self.points is not None:
                raise ValidationError("graph bundle needs adjacency and no points")
            W = np.asarray(self.adjacency, dtype=float)
            if W.ndim != 2 or W.shape[0] != W.shape[1]:
                raise ValidationError("adjacency must be square")
            if not np.array_equal(W, W.T):
                raise ValidationError("adjacency must be symmetric")
            if np.any(np.diag(W) != 0):
                raise ValidationError("adjacency must have a zero diagonal")
            if np.any(W < 0):
                raise ValidationError("adjacency must be nonnegative")
            self.adjacency = W
        else:
            raise ValidationError(f"unknown bundle kind {self.kind!r}")
        if self.group_labels.shape != (self.n,):
            raise ValidationError(
                f"expected {self.n} group labels, got {self.group_labels.shape[0]}"
            )
        if self.n and self.group_labels.min() < 0:
            raise ValidationError("group labels must be nonnegative")
        if self.ground_truth is not None:
            self.ground_truth = np.asarray(self.ground_truth, dtype=np.int64)
            if self.ground_truth.shape != (self.n,):
                raise ValidationError("ground truth must label every sample")

    @property
    def n(self):
        if self.kind == "points":
            return self.points.shape[0]
        return self.adjacency.shape[0]

    @property
    def h(self):
        return int(self.group_labels.max()) + 1 if self.n else 0


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {p}")


def msbm_edge_probability(n):
    """Default within-cluster edge probability ``(log n / n) ** (1/10)``."""
    return (math.log(n) / n) ** 0.1


def _sample_symmetric(rng, n, prob, block=1024):
    """Symmetric 0/1 matrix with independent upper-triangle edges.

    ``prob(rows, cols)`` returns the edge probabilities of a row block.
    """
    W = np.zeros((n, n))
    cols = np.arange(n)
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        u = rng.random((rows.size, n))
        mask = (u < prob(rows, cols)) & (cols[None, :] > rows[:, None])
        W[rows] = mask
    return np.maximum(W, W.T)


def gen_msbm(rng, n, k, h, p_within=None, p_between=None):
    """Fair stochastic block model with a perfectly fair planted clustering.

    Nodes are split into ``k`` equal clusters (``n`` is truncated to a
    multiple of ``k``). Every cluster has the same group composition: its
    ``n/k`` members are divided over the ``h`` groups as evenly as possible,
    with the same split in all clusters. Edges appear with probability
    ``p_within`` inside a cluster and ``p_between`` across clusters.

    Defaults are ``p_within = (log n / n) ** 0.1`` and
    ``p_between = p_within / 2``.
    """
    rng = make_rng(rng)
    if k < 1 or h < 1:
        raise ValidationError("k and h must be positive")
    n_eff = (n // k) * k
    size = n_eff // k
    if size == 0:
        raise ValidationError(f"n={n} is too small for k={k} clusters")
    if h > size:
        raise ValidationError(f"h={h} exceeds the cluster size {size}")
    if p_within is None:
        p_within = msbm_edge_probability(n_eff)
    if p_between is None:
        p_between = p_within / 2.0
    _check_prob("p_within", p_within)
    _check_prob("p_between", p_between)

    clusters = np.repeat(np.arange(k), size)
    within = np.arange(size) * h // size  # same even split in every cluster
    groups = np.tile(within, k)

    def prob(rows, cols):
        same = clusters[rows][:, None] == clusters[cols][None, :]
        return np.where(same, p_within, p_between)

    W = _sample_symmetric(rng, n_eff, prob)
    meta = {
        "generator": "msbm",
        "n": n_eff,
        "n_requested": n,
        "k": k,
        "h": h,
        "p_within": p_within,
        "p_between": p_between,
    }
    return DatasetBundle("graph", groups, name="msbm", adjacency=W,
                         ground_truth=clusters, metadata=meta)


def gen_randlaplace(rng, n, h=2, group_prob=0.3):
    """Random dense weighted graph with randomly assigned groups.

    Upper-triangle weights are i.i.d. Uniform(0, 1), mirrored, with a zero
    diagonal. Each node joins group 1 with probability ``group_prob``
    (group 0 otherwise). For ``h > 2`` the nodes drawn into the minority
    side are spread uniformly over groups ``1..h-1``.
    """
    rng = make_rng(rng)
    if n < 2:
        raise ValidationError("n must be at least 2")
    if not 0.0 < group_prob < 1.0:
        raise ValidationError("group_prob must lie in (0, 1)")
    if h < 1:
        raise ValidationError("h must be positive")
    U = rng.random((n, n))
    W = np.triu(U, 1)
    W = W + W.T
    minority = rng.random(n) < group_prob
    if h == 1:
        groups = np.zeros(n, dtype=np.int64)
    elif h == 2:
        groups = minority.astype(np.int64)
    else:
        extra = rng.integers(1, h, size=n)
        groups = np.where(minority, extra, 0)
    meta = {"generator": "randlaplace", "n": n, "h": h, "group_prob": group_prob}
    return DatasetBundle("graph", groups, name="randlaplace", adjacency=W, metadata=meta)


def gen_elliptical(rng, n):
    """Two anisotropic Gaussian clouds in the plane, two groups per cloud.

    Cloud ``c`` has center ``ELLIPTICAL_CENTERS[c]``, axis standard
    deviations ``ELLIPTICAL_STDS[c]`` and is rotated by
    ``ELLIPTICAL_ANGLES[c]``. Half of each cloud (chosen at random) forms
    group 0, the other half group 1.
    """
    rng = make_rng(rng)
    if n < 2 or n % 2:
        raise ValidationError("n must be a positive even number")
    half = n // 2
    pts, groups = [], []
    for c in range(2):
        z = rng.standard_normal((half, 2)) * ELLIPTICAL_STDS[c]
        t = ELLIPTICAL_ANGLES[c]
        rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        pts.append(z @ rot.T + ELLIPTICAL_CENTERS[c])
        g = np.zeros(half, dtype=np.int64)
        g[rng.permutation(half)[: half // 2]] = 1
        groups.append(g)
    truth = np.repeat([0, 1], half)
    meta = {
        "generator": "elliptical",
        "n": n,
        "k": 2,
        "h": 2,
        "centers": ELLIPTICAL_CENTERS.tolist(),
        "stds": ELLIPTICAL_STDS.tolist(),
        "angles": list(ELLIPTICAL_ANGLES),
    }
    return DatasetBundle("points", np.concatenate(groups), name="elliptical",
                         points=np.vstack(pts), ground_truth=truth, metadata=meta)


# --------------------------------------------------------------------------
# file formats

_SPLIT = re.compile(r"[,\s]+")


def _read_groups(group_path):
    labels = []
    with open(group_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                value = int(text)
            except ValueError:
                raise ParseError(f"group label {text!r} is not an integer", line=lineno) from None
            if value < 0:
                raise ParseError("group labels must be nonnegative", line=lineno)
            labels.append(value)
    return np.array(labels, dtype=np.int64)


def load_edge_list(path, group_path, name=None):
    """Load a weighted undirected graph from an edge list.

    Each non-empty line is ``u v`` or ``u v w`` (whitespace or comma
    separated, 0-based ids, ``#`` starts a comment). The node count is the
    number of lines in ``group_path``, which holds one integer label per
    node. Duplicate edges keep the largest weight; self-loops are dropped.
    """
    groups = _read_groups(group_path)
    n = groups.size
    W = np.zeros((n, n))
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = _SPLIT.split(text)
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'u v [w]', got {text!r}", line=lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ParseError(f"malformed edge {text!r}", line=lineno) from None
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"node id out of range for n={n}", line=lineno)
            if w < 0 or not math.isfinite(w):
                raise ParseError(f"invalid edge weight {w}", line=lineno)
            if u == v:
                continue
            if w > W[u, v]:
                W[u, v] = W[v, u] = w
    meta = {"source": str(path), "groups_source": str(group_path), "n": n}
    return DatasetBundle("graph", groups, name=name or Path(path).stem,
                         adjacency=W, metadata=meta)


def load_feature_csv(path, group_column, name=None):
    """Load a feature table with a categorical group column.

    All columns other than ``group_column`` must be numeric. Group values
    are encoded in order of first appearance; the mapping is stored in
    ``metadata["group_encoding"]``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if group_column not in header:
            raise ParseError(f"missing group column {group_column!r}", line=1)
        gidx = header.index(group_column)
        feature_cols = [i for i in range(len(header)) if i != gidx]
        rows, encoding, labels = [], {}, []
        for lineno, rec in enumerate(reader, 2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}", line=lineno)
            values = []
            for i in feature_cols:
                try:
                    values.append(float(rec[i]))
                except ValueError:
                    raise ParseError(f"non-numeric value {rec[i]!r}", line=lineno,
                                     column=header[i]) from None
            rows.append(values)
            key = rec[gidx].strip()
            labels.append(encoding.setdefault(key, len(encoding)))
    points = np.array(rows, dtype=float).reshape(len(rows), len(feature_cols))
    meta = {
        "source": str(path),
        "n": len(rows),
        "features": [header[i] for i in feature_cols],
        "group_column": group_column,
        "group_encoding": encoding,
    }
    return DatasetBundle("points", labels, name=name or Path(path).stem,
                         points=points, metadata=meta)


def _fmt(x):
    return format(float(x), ".17g")


def write_edge_list(bundle, path):
    """Write the upper-triangle edges of a graph bundle as ``u v w`` lines."""
    W = bundle.adjacency
    iu, ju = np.nonzero(np.triu(W, 1))
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in zip(iu.tolist(), ju.tolist()):
            fh.write(f"{u} {v} {_fmt(W[u, v])}\n")


def write_groups(bundle, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("".join(f"{g}\n" for g in bundle.group_labels.tolist()))


def write_feature_csv(bundle, path, group_column="group"):
    """Write a points bundle as CSV with columns ``x0..x{d-1}`` and the group column."""
    d = bundle.points.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(d)] + [group_column])
        for row, g in zip(bundle.points.tolist(), bundle.group_labels.tolist()):
            writer.writerow([_fmt(v) for v in row] + [g])


def write_metadata(bundle, path, **extra):
    meta = dict(bundle.metadata)
    meta.update(extra)
    meta["name"] = bundle.name
    meta["kind"] = bundle.kind
    if bundle.ground_truth is not None:
        meta["ground_truth"] = bundle.ground_truth.tolist()
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
