import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchkrylov.exceptions import DimensionError
from sketchkrylov.sketch import cw_new, sketch_apply, sketch_apply_block


def test_square_sketch_is_signed_permutation_like():
    S = cw_new(40, 40, seed=3)
    M = S.toarray()
    assert np.all(np.count_nonzero(M, axis=0) == 1)
    assert set(np.unique(M[M != 0])) <= {-1.0, 1.0}


def test_deterministic():
    S1, S2 = cw_new(50, 400, seed=11), cw_new(50, 400, seed=11)
    np.testing.assert_array_equal(S1.row_of, S2.row_of)
    np.testing.assert_array_equal(S1.sign_of, S2.sign_of)
    S3 = cw_new(50, 400, seed=12)
    assert not np.array_equal(S1.row_of, S3.row_of)


def test_invalid_dimensions():
    with pytest.raises(ValueError):
        cw_new(0, 10)
    with pytest.raises(ValueError):
        cw_new(11, 10)


def test_row_histogram_concentration():
    s, n = 1000, 100_000
    S = cw_new(s, n, seed=7)
    counts = np.bincount(S.row_of, minlength=s)
    mean = n / s
    inside = np.abs(counts - mean) <= 5 * np.sqrt(mean)
    assert inside.mean() >= 0.99


def test_zero_and_unit_vectors():
    S = cw_new(8, 30, seed=1)
    np.testing.assert_array_equal(sketch_apply(S, np.zeros(30)), np.zeros(8))
    for j in (0, 7, 29):
        expected = np.zeros(8)
        expected[S.row_of[j]] = S.sign_of[j]
        np.testing.assert_array_equal(sketch_apply(S, np.eye(30)[j]), expected)


def test_apply_matches_dense(rng):
    S = cw_new(25, 300, seed=5)
    v = rng.standard_normal(300)
    np.testing.assert_allclose(sketch_apply(S, v), S.toarray() @ v, rtol=1e-13, atol=1e-13)
    np.testing.assert_array_equal(S @ v, sketch_apply(S, v))


def test_dimension_mismatch():
    S = cw_new(4, 10)
    with pytest.raises(DimensionError):
        sketch_apply(S, np.ones(9))
    with pytest.raises(DimensionError):
        sketch_apply_block(S, np.ones((9, 2)))


def test_norm_ratio_monte_carlo(rng):
    # oversampling 4x a 50-dimensional subspace
    dim = 50
    S = cw_new(4 * dim, 20_000, seed=2)
    Q, _ = np.linalg.qr(rng.standard_normal((20_000, dim)))
    C = rng.standard_normal((dim, 1000))
    V = Q @ C
    ratios = np.linalg.norm(sketch_apply_block(S, V), axis=0) / np.linalg.norm(V, axis=0)
    assert ratios.min() >= 0.3 and ratios.max() <= 1.7


def test_unbiased_norm(rng):
    v = rng.standard_normal(2000)
    sq = [np.sum(sketch_apply(cw_new(100, 2000, seed=k), v) ** 2) for k in range(200)]
    assert np.mean(sq) == pytest.approx(v @ v, rel=0.1)


def test_block_matches_columns_bitwise(rng):
    S = cw_new(20, 50, seed=9)
    M = rng.standard_normal((50, 3))
    out = sketch_apply_block(S, M)
    for j in range(3):
        np.testing.assert_array_equal(out[:, j], sketch_apply(S, M[:, j]))


def test_block_single_and_repeated_column(rng):
    S = cw_new(6, 20, seed=4)
    v = rng.standard_normal(20)
    np.testing.assert_array_equal(sketch_apply_block(S, v[:, None])[:, 0], sketch_apply(S, v))
    out = S @ np.column_stack([v, v])
    np.testing.assert_array_equal(out[:, 0], out[:, 1])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    S = cw_new(16, 64, seed=seed)
    x, y = rng.standard_normal(64), rng.standard_normal(64)
    lhs = sketch_apply(S, a * x + b * y)
    rhs = a * sketch_apply(S, x) + b * sketch_apply(S, y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (abs(a) + abs(b) + 1) * 64)
