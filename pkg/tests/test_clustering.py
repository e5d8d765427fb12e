import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairsc.clustering import KmeansConfig, indicator_embedding, kmeans, kmeans_pp_init, lloyd
from fairsc.errors import ValidationError


def test_separable_blobs():
    X = np.array([0.0, 0.1, 0.2, 10.0, 10.1, 10.2])[:, None]
    res = kmeans(X, KmeansConfig(2))
    assert len(set(res.labels[:3])) == 1 and len(set(res.labels[3:])) == 1
    assert res.labels[0] != res.labels[3]
    assert res.inertia == pytest.approx(2 * 0.02, abs=1e-12)


def test_single_cluster_inertia_is_total_scatter():
    X = np.random.default_rng(0).standard_normal((50, 3))
    res = kmeans(X, KmeansConfig(1))
    assert res.inertia == pytest.approx(np.sum((X - X.mean(0)) ** 2), rel=1e-12)


def test_one_cluster_per_point():
    X = np.random.default_rng(1).standard_normal((8, 2))
    res = kmeans(X, KmeansConfig(8))
    assert res.inertia == pytest.approx(0.0, abs=1e-20)
    assert sorted(res.labels.tolist()) == list(range(8))


def test_too_few_points():
    with pytest.raises(ValidationError):
        kmeans(np.zeros((3, 2)), KmeansConfig(4))


def test_config_validation():
    with pytest.raises(ValidationError):
        KmeansConfig(0)
    with pytest.raises(ValidationError):
        KmeansConfig(2, restarts=0)


def test_deterministic_for_seed():
    X = np.random.default_rng(2).standard_normal((200, 4))
    a = kmeans(X, KmeansConfig(5, seed=3))
    b = kmeans(X, KmeansConfig(5, seed=3))
    assert np.array_equal(a.labels, b.labels) and a.inertia == b.inertia


def test_more_restarts_never_worse():
    X = np.random.default_rng(3).standard_normal((150, 2))
    one = kmeans(X, KmeansConfig(6, restarts=1, seed=0))
    ten = kmeans(X, KmeansConfig(6, restarts=10, seed=0))
    assert ten.inertia <= one.inertia


def test_duplicate_points_seed_distinct_centers():
    X = np.zeros((5, 2))
    X[4] = 1.0
    C = kmeans_pp_init(X, 3, np.random.default_rng(0))
    assert C.shape == (3, 2)
    labels, _, inertia, _, _ = lloyd(X, C)
    assert inertia == pytest.approx(0.0)
    assert len(set(labels.tolist())) == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_lloyd_history_is_monotone(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((40, 3))
    C0 = kmeans_pp_init(X, k, rng)
    _, _, inertia, _, hist = lloyd(X, C0)
    assert all(b <= a * (1 + 1e-12) for a, b in zip(hist, hist[1:]))
    assert inertia == hist[-1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_row_permutation_preserves_inertia(seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, 0.1, (15, 2)) for c in (0.0, 5.0, 10.0)])
    perm = rng.permutation(len(X))
    a = kmeans(X, KmeansConfig(3))
    b = kmeans(X[perm], KmeansConfig(3))
    assert a.inertia == pytest.approx(b.inertia, rel=1e-9)


class TestIndicator:
    def test_example(self):
        H = indicator_embedding([0, 0, 1], 2)
        s = 1 / np.sqrt(2)
        assert np.allclose(H, [[s, 0], [s, 0], [0, 1]])
        assert np.allclose(H.T @ H, np.eye(2))

    def test_empty_cluster_warns(self):
        with pytest.warns(RuntimeWarning):
            H = indicator_embedding([0, 0, 2], 3)
        assert np.all(H[:, 1] == 0)

    def test_label_range(self):
        with pytest.raises(ValidationError):
            indicator_embedding([0, 3], 3)
