import numpy as np
import pytest

from sketchkrylov.dense import (
    GivensLSQ,
    UpdatingQR,
    cond2,
    hessenberg_lsq_step,
    hessenberg_solve,
    qr_least_squares,
)
from sketchkrylov.exceptions import BreakdownError, DimensionError


def gauss_solve(M, rhs):
    """Gaussian elimination with partial pivoting, pure Python."""
    n = len(rhs)
    a = [list(map(float, row)) + [float(r)] for row, r in zip(M, rhs)]
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(a[r][c]))
        a[c], a[p] = a[p], a[c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            for k in range(c, n + 1):
                a[r][k] -= f * a[c][k]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (a[r][n] - sum(a[r][k] * x[k] for k in range(r + 1, n))) / a[r][r]
    return np.array(x)


def jacobi_singular_values(M, sweeps=60):
    """One-sided Jacobi: orthogonalize columns of M pairwise; column norms are the singular values."""
    U = np.array(M, dtype=float, copy=True)
    k = U.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for p in range(k - 1):
            for q in range(p + 1, k):
                a = U[:, p] @ U[:, p]
                b = U[:, q] @ U[:, q]
                g = U[:, p] @ U[:, q]
                off = max(off, abs(g) / np.sqrt(a * b))
                if abs(g) < 1e-300:
                    continue
                zeta = (b - a) / (2 * g)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1 + zeta * zeta)) if zeta != 0 else 1.0
                c = 1 / np.sqrt(1 + t * t)
                s = c * t
                up = U[:, p].copy()
                U[:, p] = c * up - s * U[:, q]
                U[:, q] = s * up + c * U[:, q]
        if off < 1e-15:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def random_hessenberg(rng, rows, cols, shift=0.0):
    H = np.triu(rng.standard_normal((rows, cols)), -1)
    H[: min(rows, cols), : min(rows, cols)] += shift * np.eye(min(rows, cols))
    return H


# -- qr_least_squares ---------------------------------------------------------

def test_lsq_identity():
    y, res, rank = qr_least_squares(np.eye(3), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(y, [1, 2, 3], rtol=1e-15)
    assert res < 1e-15 and rank == 3


def test_lsq_one_column():
    y, res, rank = qr_least_squares(np.array([[1.0], [1.0]]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(y, [0.5], rtol=1e-15)
    assert res == pytest.approx(np.sqrt(0.5), rel=1e-15)
    assert rank == 1


def test_lsq_matches_normal_equations(rng):
    M = rng.standard_normal((20, 6))
    rhs = rng.standard_normal(20)
    expected = gauss_solve(M.T @ M, M.T @ rhs)
    y, res, rank = qr_least_squares(M, rhs)
    np.testing.assert_allclose(y, expected, rtol=1e-10)
    assert rank == 6
    assert res == pytest.approx(np.linalg.norm(rhs - M @ expected), rel=1e-10)


def test_lsq_rank_deficient_is_minimum_norm(rng):
    B = rng.standard_normal((15, 3))
    M = np.hstack([B, B[:, :1] + B[:, 1:2], 2 * B[:, 2:]])
    rhs = rng.standard_normal(15)
    y, res, rank = qr_least_squares(M, rhs)
    assert rank == 3
    np.testing.assert_allclose(y, np.linalg.pinv(M) @ rhs, rtol=1e-9, atol=1e-12)


def test_lsq_errors_and_zero():
    with pytest.raises(DimensionError):
        qr_least_squares(np.ones((2, 3)), np.ones(2))
    y, res, rank = qr_least_squares(np.zeros((4, 2)), np.array([3.0, 4.0, 0.0, 0.0]))
    np.testing.assert_array_equal(y, [0, 0])
    assert res == 5.0 and rank == 0


def test_lsq_residual_is_optimal(rng):
    M = rng.standard_normal((12, 5))
    rhs = rng.standard_normal(12)
    y, res, _ = qr_least_squares(M, rhs)
    assert res <= np.linalg.norm(rhs)
    for _ in range(100):
        cand = y + rng.standard_normal(5) * 10.0 ** rng.uniform(-6, 1)
        assert res <= np.linalg.norm(rhs - M @ cand) * (1 + 1e-14)


# -- Hessenberg least squares -------------------------------------------------

def test_hessenberg_lsq_exact():
    y, res = hessenberg_lsq_step(np.array([[2.0], [0.0]]), 4.0)
    np.testing.assert_allclose(y, [2.0])
    assert res == 0.0


def test_hessenberg_lsq_2x1():
    # normal equations: 2 y = 1
    y, res = hessenberg_lsq_step(np.array([[1.0], [1.0]]), 1.0)
    np.testing.assert_allclose(y, [0.5], rtol=1e-15)
    assert res == pytest.approx(np.sqrt(0.5), rel=1e-15)


def test_hessenberg_lsq_matches_qr(rng):
    H = random_hessenberg(rng, 4, 3)
    y, res = hessenberg_lsq_step(H, 1.0)
    e1 = np.eye(4)[0]
    y2, res2, _ = qr_least_squares(H, e1)
    np.testing.assert_allclose(y, y2, rtol=1e-12)
    assert res == pytest.approx(res2, rel=1e-12)


def test_progressive_residual_equals_explicit(rng):
    for m in (1, 5, 20):
        H = random_hessenberg(rng, m + 1, m)
        beta = 3.0
        y, res = hessenberg_lsq_step(H, beta)
        explicit = np.linalg.norm(beta * np.eye(m + 1)[0] - H @ y)
        assert res == pytest.approx(explicit, rel=1e-12)


def test_givens_progressive_nonincreasing(rng):
    m = 15
    H = random_hessenberg(rng, m + 1, m)
    lsq = GivensLSQ(1.0, m)
    prev = 1.0
    for j in range(m):
        r = lsq.add_column(H[: j + 2, j])
        assert r <= prev * (1 + 1e-15)
        prev = r


def test_hessenberg_lsq_singular():
    with pytest.raises(BreakdownError):
        hessenberg_lsq_step(np.zeros((3, 2)), 1.0)


def test_hessenberg_shape_checks():
    with pytest.raises(DimensionError):
        hessenberg_lsq_step(np.zeros((3, 3)), 1.0)
    with pytest.raises(ValueError):
        hessenberg_lsq_step(np.ones((4, 3)), 1.0)


# -- Hessenberg solve ---------------------------------------------------------

def test_hessenberg_solve_identity():
    np.testing.assert_array_equal(hessenberg_solve(np.eye(4), np.eye(4)[0]), np.eye(4)[0])


def test_hessenberg_solve_permutation():
    y = hessenberg_solve(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(y, [0.0, 1.0], atol=1e-16)


def test_hessenberg_solve_residual(rng):
    H = random_hessenberg(rng, 6, 6, shift=5.0)
    rhs = rng.standard_normal(6)
    y = hessenberg_solve(H, rhs)
    assert np.linalg.norm(H @ y - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_hessenberg_solve_singular():
    H = np.array([[1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(BreakdownError):
        hessenberg_solve(H, np.array([1.0, 0.0]))


# -- cond2 --------------------------------------------------------------------

def test_cond_identity():
    assert cond2(np.eye(5)) == pytest.approx(1.0, rel=1e-15)


def test_cond_diagonal():
    assert cond2(np.diag([10.0, 1.0, 0.1])) == pytest.approx(100.0, rel=1e-13)


def test_cond_matches_jacobi(rng):
    M = rng.standard_normal((30, 8)) @ np.diag(10.0 ** np.arange(8))
    sv = jacobi_singular_values(M)
    assert cond2(M) == pytest.approx(sv[0] / sv[-1], rel=1e-8)


def test_cond_singular_and_empty():
    assert cond2(np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])) > 1e15
    assert cond2(np.zeros((3, 2))) == np.inf
    with pytest.raises(ValueError):
        cond2(np.zeros((0, 3)))


def test_cond_at_least_one(rng):
    for _ in range(20):
        m = rng.integers(1, 10)
        M = rng.standard_normal((m + rng.integers(0, 5), m))
        assert cond2(M) >= 1.0 - 1e-14


# -- UpdatingQR ---------------------------------------------------------------

def test_updating_qr_matches_lsq(rng):
    M = rng.standard_normal((40, 12))
    rhs = rng.standard_normal(40)
    qr = UpdatingQR(rhs, 12)
    for j in range(12):
        qr.append(M[:, j])
        y_ref, res_ref, _ = qr_least_squares(M[:, : j + 1], rhs)
        y, res, _ = qr.solve()
        np.testing.assert_allclose(y, y_ref, rtol=1e-10, atol=1e-12)
        assert res == pytest.approx(res_ref, rel=1e-10)
        assert qr.residual == pytest.approx(res_ref, rel=1e-10)
    y, res, cond = qr.solve(use_svd=True)
    np.testing.assert_allclose(y, y_ref, rtol=1e-10)
    assert cond == pytest.approx(cond2(M), rel=1e-10)


def test_updating_qr_dependent_column(rng):
    M = rng.standard_normal((20, 3))
    rhs = rng.standard_normal(20)
    qr = UpdatingQR(rhs, 4)
    for j in range(3):
        qr.append(M[:, j])
    qr.append(M[:, 0] + M[:, 1])
    y, res, cond = qr.solve(use_svd=True)
    assert cond > 1e14
    _, res_ref, _ = qr_least_squares(M, rhs)
    assert res == pytest.approx(res_ref, rel=1e-9)
