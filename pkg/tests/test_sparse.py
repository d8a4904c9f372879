import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchkrylov.exceptions import BreakdownError, DimensionError
from sketchkrylov.sparse import CountingOperator, SparseMatrix, as_operator, from_triplets, matvec


def random_sparse(rng, n, m, nnz):
    pos = rng.choice(n * m, size=nnz, replace=False)
    trip = [(int(p // m), int(p % m), float(rng.standard_normal())) for p in pos]
    return from_triplets(n, m, trip), trip


def dense_oracle(n, m, trip):
    D = [[0.0] * m for _ in range(n)]
    for i, j, v in trip:
        D[i][j] += v
    return D


def triple_loop(D, x):
    return [sum(D[i][j] * x[j] for j in range(len(x))) for i in range(len(D))]


def test_identity_matvec():
    y = matvec(SparseMatrix.identity(5), np.arange(1.0, 6.0))
    np.testing.assert_array_equal(y, [1, 2, 3, 4, 5])


def test_zero_matrix_matvec():
    Z = from_triplets(4, 3, [])
    np.testing.assert_array_equal(matvec(Z, np.ones(3)), np.zeros(4))


def test_matvec_matches_triple_loop(rng):
    A, trip = random_sparse(rng, 8, 8, 20)
    x = rng.standard_normal(8)
    expected = np.array(triple_loop(dense_oracle(8, 8, trip), list(x)))
    np.testing.assert_allclose(matvec(A, x), expected, rtol=1e-14, atol=1e-14 * np.abs(expected).max())


def test_matvec_dimension_mismatch():
    with pytest.raises(DimensionError):
        matvec(SparseMatrix.identity(3), np.ones(4))


def test_matvec_nan_is_breakdown():
    A = from_triplets(2, 2, [(0, 0, np.inf), (1, 1, 1.0)])
    with pytest.raises(BreakdownError):
        matvec(A, np.array([0.0, 1.0]))


def test_duplicates_summed():
    A = from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0)])
    assert A.nnz == 1
    assert A.values[0] == 3.0
    assert list(A.row_offsets) == [0, 1, 1]


def test_empty_triplets():
    A = from_triplets(3, 3, [])
    assert A.nnz == 0
    assert list(A.row_offsets) == [0, 0, 0, 0]


def test_shuffled_triplets_canonical(rng):
    D = np.array([[4.0, 0, 1, 0], [0, 2, 0, -1], [3, 0, 5, 0], [0, 7, 0, 6]])
    rows, cols = np.nonzero(D)
    canonical = SparseMatrix(
        4, 4, [0, 2, 4, 6, 8], cols, D[rows, cols]
    )
    trip = [(int(i), int(j), float(D[i, j])) for i, j in zip(rows, cols)]
    for _ in range(5):
        rng.shuffle(trip)
        assert from_triplets(4, 4, trip) == canonical


def test_out_of_range_triplet():
    with pytest.raises(IndexError):
        from_triplets(2, 2, [(2, 0, 1.0)])
    with pytest.raises(IndexError):
        from_triplets(2, 2, [(0, -1, 1.0)])


def test_invariants_enforced():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        SparseMatrix(1, 3, [0, 2], [2, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        SparseMatrix(1, 2, [0, 1], [0], [np.nan])


def test_immutable():
    A = SparseMatrix.identity(3)
    with pytest.raises(ValueError):
        A.values[0] = 2.0


def test_columns_via_unit_vectors(rng):
    A, trip = random_sparse(rng, 7, 5, 15)
    D = np.array(dense_oracle(7, 5, trip))
    for j in range(5):
        np.testing.assert_array_equal(matvec(A, np.eye(5)[j]), D[:, j])


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.floats(-10, 10),
    beta=st.floats(-10, 10),
)
def test_linearity(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    A, _ = random_sparse(rng, 12, 12, 40)
    x, y = rng.standard_normal(12), rng.standard_normal(12)
    lhs = matvec(A, alpha * x + beta * y)
    rhs = alpha * matvec(A, x) + beta * matvec(A, y)
    scale = np.abs(A.values).sum() * (abs(alpha) * np.abs(x).max() + abs(beta) * np.abs(y).max())
    assert np.all(np.abs(lhs - rhs) <= 1e-13 * max(scale, 1e-300))


def test_counting_operator_counts(rng):
    A, _ = random_sparse(rng, 6, 6, 10)
    op = as_operator(A)
    assert as_operator(op) is op
    for _ in range(3):
        op.matvec(np.ones(6))
    assert op.n_matvecs == 3
    dense = CountingOperator(A.toarray())
    np.testing.assert_allclose(dense @ np.ones(6), op @ np.ones(6))


def test_counting_operator_requires_shape_for_callable():
    with pytest.raises(ValueError):
        CountingOperator(lambda x: x)
    op = CountingOperator(lambda x: 2 * x, shape=(3, 3))
    np.testing.assert_array_equal(op.matvec(np.ones(3)), 2 * np.ones(3))
