import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochastic_lr.summarize import GroupAssignment, MinGroupSizeError, group_summaries, \
    kmeans, quantile_bins, regularize_cov, summaries_to_json


def test_kmeans_two_pairs():
    X = np.array([[0, 0], [0, 1], [10, 0], [10, 1]], dtype=float)
    a = kmeans(X, 2, seed=3)
    assert a.group_of.tolist() == [0, 0, 1, 1]
    assert np.allclose(a.centers, [[0, 0.5], [10, 0.5]])


def test_kmeans_single_group_is_global_mean():
    X = np.random.default_rng(0).normal(size=(9, 2))
    a = kmeans(X, 1)
    assert np.all(a.group_of == 0)
    assert np.allclose(a.centers[0], X.mean(axis=0))


def test_kmeans_singleton_raises():
    X = np.array([[0.0], [1.0], [5.0], [5.0], [5.1]])
    X3 = np.array([[0.0, 0.0], [4.0, 0.0], [9.0, 0.0]])
    with pytest.raises(ValueError):
        kmeans(X3, 2)  # 2 > floor(3/2)
    with pytest.raises(MinGroupSizeError) as err:
        kmeans(np.vstack([X3, [[100.0, 100.0]]]), 2, seed=0)
    assert "group" in str(err.value)
    assert kmeans(X, 2, seed=1).sizes().min() >= 2


def test_kmeans_rejects_bad_k():
    X = np.zeros((6, 1))
    for k in (0, 4):
        with pytest.raises(ValueError):
            kmeans(X, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 4))
def test_kmeans_inertia_non_increasing_and_seeded(seed, k):
    X = np.random.default_rng(seed).normal(size=(40, 3))
    try:
        a = kmeans(X, k, seed=seed)
    except MinGroupSizeError:
        return
    h = np.array(a.inertia_history)
    assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))
    b = kmeans(X, k, seed=seed)
    assert np.array_equal(a.group_of, b.group_of)
    # labels numbered by first appearance
    first = [int(np.flatnonzero(a.group_of == g)[0]) for g in range(k)]
    assert first == sorted(first)


def test_quantile_examples():
    assert quantile_bins([0.1, 0.2, 0.8, 0.9], 2).group_of.tolist() == [0, 0, 1, 1]
    assert np.all(quantile_bins(np.random.default_rng(0).random(7), 1).group_of == 0)
    sizes = quantile_bins(np.linspace(0, 1, 10), 3).sizes()
    assert sorted(sizes.tolist()) == [3, 3, 4]
    # boundaries floor(b * 10 / 3) = 0, 3, 6, 10
    assert sizes.tolist() == [3, 3, 4]


def test_quantile_ties_stable_by_row():
    a = quantile_bins([0.5, 0.5, 0.5, 0.5], 2)
    assert a.group_of.tolist() == [0, 0, 1, 1]


@given(st.lists(st.floats(0, 1), min_size=4, max_size=60, unique=True))
def test_quantile_pairs_when_q_is_half(scores):
    n = len(scores) - len(scores) % 2
    a = quantile_bins(scores[:n], n // 2)
    assert np.all(a.sizes() == 2)


def test_group_summary_example():
    X = np.array([[0.0, 0.0], [2.0, 2.0]])
    (g,) = group_summaries(X, [0.2, 0.4], GroupAssignment(np.array([0, 0]), 1), floor=0.0)
    assert np.allclose(g.mean, [1, 1])
    lam = 1e-8 * 2.0
    assert np.allclose(g.covariance, [[2 + lam, 2], [2, 2 + lam]], atol=1e-15)
    assert abs(g.mean_score - 0.3) <= 1e-15 and g.size == 2


def test_identical_rows_get_ridge_only():
    X = np.tile([1.0, -2.0, 3.0], (4, 1))
    (g,) = group_summaries(X, np.full(4, 0.5), GroupAssignment(np.zeros(4, dtype=int), 1))
    assert np.array_equal(g.covariance, 1e-8 * np.eye(3))


def test_mean_score_clamped():
    X = np.random.default_rng(0).normal(size=(4, 1))
    (g,) = group_summaries(X, [0, 0, 0, 0], GroupAssignment(np.zeros(4, dtype=int), 1))
    assert g.mean_score == 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_invariance_and_mass(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3))
    s = rng.random(30)
    labels = np.repeat(np.arange(5), 6)
    rng.shuffle(labels)
    a = GroupAssignment(labels, 5)
    base = group_summaries(X, s, a)
    perm = rng.permutation(30)
    other = group_summaries(X[perm], s[perm], GroupAssignment(labels[perm], 5))
    for g, h in zip(base, other):
        assert np.array_equal(g.mean, h.mean)
        assert np.array_equal(g.covariance, h.covariance)
        assert g.mean_score == h.mean_score
    total = sum(g.size * g.mean for g in base)
    assert np.allclose(total, X.sum(axis=0), atol=1e-9)
    for g in base:
        assert np.array_equal(g.covariance, g.covariance.T)
        np.linalg.cholesky(g.covariance)


def test_regularize_examples():
    assert np.array_equal(regularize_cov(np.zeros((3, 3))), 1e-8 * np.eye(3))
    assert np.allclose(regularize_cov(np.eye(2)), (1 + 1e-8) * np.eye(2), rtol=0, atol=1e-16)
    with pytest.raises(ValueError):
        regularize_cov(np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(st.integers(0, 10_000))
def test_regularize_lifts_noise(seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    V = Q @ np.diag([-1e-10, 0.5, 2.0]) @ Q.T
    V = 0.5 * (V + V.T)
    out = regularize_cov(V)
    lam = max(1e-8, 1e-8 * np.trace(V) / 3)
    assert np.linalg.eigvalsh(out).min() >= lam - 1e-10 - 1e-12


def test_json_dump(tmp_path):
    X = np.random.default_rng(0).normal(size=(4, 2))
    groups = group_summaries(X, np.full(4, 0.5), GroupAssignment(np.array([0, 1, 0, 1]), 2))
    text = summaries_to_json(groups, tmp_path / "g.json")
    assert (tmp_path / "g.json").read_text().startswith("[")
    assert '"group": 1' in text
