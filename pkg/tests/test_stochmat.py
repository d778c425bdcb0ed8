import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_ds
from risknet.errors import DimensionMismatch
from risknet.graphs import Graph, naive_star_matrix, random_walk_matrix
from risknet.stochmat import (
    SharingMatrix,
    apply,
    averaging_operator,
    classify,
    identity,
    mix,
    permutation_matrix,
    row_norms_sq,
)


def test_sharing_matrix_caches_sums_and_is_immutable():
    m = SharingMatrix([[0.2, 0.8], [0.5, 0.5]])
    np.testing.assert_allclose(m.row_sums, [1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(m.col_sums, [0.7, 1.3], atol=1e-12)
    with pytest.raises(ValueError):
        m.entries[0, 0] = 3.0


def test_negative_dust_is_clamped_but_real_negatives_rejected():
    m = SharingMatrix([[1.0, -1e-13], [0.0, 1.0]])
    assert m[0, 1] == 0.0
    with pytest.raises(ValueError):
        SharingMatrix([[1.0, -1e-6], [0.0, 1.0]])


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), [[np.nan]]])
def test_rejects_malformed(bad):
    with pytest.raises(ValueError):
        SharingMatrix(bad)


def test_classify_averaging_operator():
    c = classify(averaging_operator(3), 1e-9)
    assert c.is_row_stochastic and c.is_col_stochastic and c.is_doubly_stochastic
    assert not c.is_permutation


def test_classify_two_zero_example():
    # column sums are (2, 0): by definition neither row- nor column-stochastic
    c = classify(SharingMatrix([[2, 0], [0, 0]]), 1e-9)
    assert not c.is_row_stochastic
    assert not c.is_col_stochastic


def test_classify_random_walk_on_path():
    path = random_walk_matrix(Graph.from_edges(3, [(0, 1), (1, 2)]))
    # hand oracle: leaves send everything to the centre, centre splits 1/2, 1/2
    np.testing.assert_allclose(path.entries, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])
    np.testing.assert_allclose(path.col_sums, [0.5, 2.0, 0.5])
    c = classify(path)
    assert c.is_row_stochastic and not c.is_col_stochastic


def test_classify_rejects_bad_tol():
    with pytest.raises(ValueError):
        classify(identity(2), 0.0)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_averaging_operator_entries(n):
    b = averaging_operator(n)
    np.testing.assert_array_equal(b.entries, np.full((n, n), 1.0 / n))


def test_averaging_operator_rejects_zero():
    with pytest.raises(ValueError):
        averaging_operator(0)


@pytest.mark.parametrize("n", range(1, 65))
def test_averaging_operator_idempotent(n):
    b = averaging_operator(n).entries
    assert np.abs(b @ b - b).max() <= 1e-12


@pytest.mark.parametrize(
    "perm, ones",
    [([0, 1, 2], [(0, 0), (1, 1), (2, 2)]), ([1, 0], [(0, 1), (1, 0)]), ([1, 2, 0], [(0, 1), (1, 2), (2, 0)])],
)
def test_permutation_matrix(perm, ones):
    p = permutation_matrix(perm)
    expected = np.zeros((len(perm), len(perm)))
    for i, j in ones:
        expected[i, j] = 1
    np.testing.assert_array_equal(p.entries, expected)
    assert classify(p).is_permutation


@pytest.mark.parametrize("bad", [[0, 0], [1, 2], [0, 2, 1, 1], []])
def test_permutation_matrix_rejects_non_bijection(bad):
    with pytest.raises(ValueError):
        permutation_matrix(bad)


def test_apply_examples():
    np.testing.assert_allclose(apply(averaging_operator(2), [4, 0]), [2, 2])
    np.testing.assert_allclose(apply(naive_star_matrix(3), [1, 2, 3]), [6, 0, 0])
    np.testing.assert_allclose(apply(identity(3), [1, -2, 5]), [1, -2, 5])
    with pytest.raises(DimensionMismatch):
        apply(identity(3), [1, 2])


def test_mix_examples():
    p = random_ds(np.random.default_rng(0), 4)
    np.testing.assert_array_equal(mix(0.0, p).entries, np.eye(4))
    np.testing.assert_allclose(mix(1.0, averaging_operator(3)).entries, averaging_operator(3).entries)
    half = mix(0.5, averaging_operator(2))
    np.testing.assert_allclose(half.entries, [[0.75, 0.25], [0.25, 0.75]])
    assert classify(half).is_doubly_stochastic
    with pytest.raises(ValueError):
        mix(1.5, p)


def test_row_norms_sq_examples():
    np.testing.assert_allclose(row_norms_sq(averaging_operator(5)), np.full(5, 0.2))
    np.testing.assert_allclose(row_norms_sq(identity(3)), np.ones(3))
    ring = np.array([[1, 1, 0, 1], [1, 1, 1, 0], [0, 1, 1, 1], [1, 0, 1, 1]]) / 3
    np.testing.assert_allclose(row_norms_sq(ring), np.full(4, 1 / 3))


def _cs_matrix(raw):
    return raw / raw.sum(axis=0, keepdims=True)


nonneg = arrays(np.float64, (5, 5), elements=st.floats(0.01, 10.0))
vectors = arrays(np.float64, 5, elements=st.floats(-100, 100))


@given(nonneg, vectors)
def test_budget_balance_for_column_stochastic(raw, x):
    m = SharingMatrix(_cs_matrix(raw))
    assert classify(m).is_col_stochastic
    assert abs(apply(m, x).sum() - x.sum()) <= 1e-9 * max(np.abs(x).sum(), 1e-300) + 1e-12


@given(nonneg, vectors)
def test_row_stochastic_gives_convex_combinations(raw, x):
    m = SharingMatrix(raw / raw.sum(axis=1, keepdims=True))
    y = apply(m, x)
    assert np.all(y >= x.min() - 1e-9) and np.all(y <= x.max() + 1e-9)


@given(st.sampled_from([0.0, 0.25, 0.5, 1.0]), st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_mix_preserves_doubly_stochastic(lam, n, seed):
    p = random_ds(np.random.default_rng(seed), n)
    assert classify(mix(lam, p)).is_doubly_stochastic


@given(nonneg, st.floats(0, 1))
def test_mix_preserves_row_and_column_classes(raw, lam):
    rs = SharingMatrix(raw / raw.sum(axis=1, keepdims=True))
    cs = SharingMatrix(_cs_matrix(raw))
    assert classify(mix(lam, rs)).is_row_stochastic
    assert classify(mix(lam, cs)).is_col_stochastic
