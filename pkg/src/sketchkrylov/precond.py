"""ILU(0) left preconditioning."""

from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import DimensionError, ZeroPivotError
from .sparse import SparseMatrix, as_operator

__all__ = ["Ilu0Factors", "ilu0_factor", "precond_apply", "left_preconditioned_system"]


@dataclass(frozen=True)
class Ilu0Factors:
    """``L`` is unit lower triangular (unit diagonal stored), ``U`` upper triangular."""

    L: SparseMatrix
    U: SparseMatrix

    @property
    def shape(self):
        return self.L.shape

    def solve(self, r):
        return precond_apply(self, r)


@numba.njit(cache=True)
def _ilu0_ikj(n, indptr, indices, data, diag_pos, pivot_tol):
    # in-place IKJ elimination restricted to the pattern of A
    lu = data.copy()
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        for p in range(lo, hi):
            marker[indices[p]] = p
        for p in range(lo, hi):
            k = indices[p]
            if k >= i:
                break
            lu[p] /= lu[diag_pos[k]]
            lik = lu[p]
            for q in range(diag_pos[k] + 1, indptr[k + 1]):
                pos = marker[indices[q]]
                if pos >= 0:
                    lu[pos] -= lik * lu[q]
        if abs(lu[diag_pos[i]]) < pivot_tol:
            return lu, i
        for p in range(lo, hi):
            marker[indices[p]] = -1
    return lu, -1


@numba.njit(cache=True)
def _lower_unit_solve(n, indptr, indices, data, r):
    y = r.copy()
    for i in range(n):
        acc = y[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j < i:
                acc -= data[p] * y[j]
        y[i] = acc
    return y


@numba.njit(cache=True)
def _upper_solve(n, indptr, indices, data, y):
    z = y.copy()
    for i in range(n - 1, -1, -1):
        acc = z[i]
        d = 1.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                acc -= data[p] * z[j]
            elif j == i:
                d = data[p]
        z[i] = acc / d
    return z


def ilu0_factor(A):
    """Incomplete LU factorization with zero fill-in (IKJ variant).

    Raises
    ------
    ZeroPivotError
        If a diagonal entry is structurally missing or a pivot falls below
        ``1e-14 * max|A|``.
    """
    if not isinstance(A, SparseMatrix):
        A = SparseMatrix.from_scipy(A)
    n = A.n_rows
    if A.n_cols != n:
        raise DimensionError("ILU(0) needs a square matrix")
    indptr, indices = A.row_offsets, A.col_indices
    diag_pos = np.full(n, -1, dtype=np.int64)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    on_diag = np.flatnonzero(rows == indices)
    diag_pos[rows[on_diag]] = on_diag
    missing = np.flatnonzero(diag_pos < 0)
    if missing.size:
        raise ZeroPivotError(
            f"row {missing[0]} has no stored diagonal entry; "
            "use the identity preconditioner or reorder/scale the matrix"
        )
    amax = float(np.max(np.abs(A.values))) if A.nnz else 0.0
    lu, bad = _ilu0_ikj(n, indptr, indices, A.values, diag_pos, 1e-14 * amax)
    if bad >= 0:
        raise ZeroPivotError(
            f"ILU(0) pivot in row {bad} is {lu[diag_pos[bad]]:.3e}; "
            "use the identity preconditioner or scale the rows of A"
        )
    lower = indices < rows
    upper = ~lower
    lvals = np.where(lower, lu, 0.0)
    lvals[on_diag] = 1.0
    keep_l = lower.copy()
    keep_l[on_diag] = True
    L = _take(n, rows, indices, lvals, keep_l)
    U = _take(n, rows, indices, lu, upper)
    return Ilu0Factors(L, U)


def _take(n, rows, cols, vals, mask):
    counts = np.bincount(rows[mask], minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return SparseMatrix(n, n, offsets, cols[mask], vals[mask])


def precond_apply(F, r):
    """``U^{-1} L^{-1} r``."""
    r = np.asarray(r, dtype=np.float64)
    n = F.L.n_rows
    if r.shape != (n,):
        raise DimensionError(f"vector of shape {r.shape} for factors of order {n}")
    L, U = F.L, F.U
    y = _lower_unit_solve(n, L.row_offsets, L.col_indices, L.values, r)
    return _upper_solve(n, U.row_offsets, U.col_indices, U.values, y)


class _LeftPreconditioned:
    def __init__(self, A, F):
        self.A = as_operator(A)
        self.F = F
        self.shape = self.A.shape

    def matvec(self, x):
        Ax = self.A.matvec(x)
        return Ax if self.F is None else precond_apply(self.F, Ax)


def left_preconditioned_system(A, b, F=None):
    """Return ``(op, rhs)`` for ``M^{-1} A x = M^{-1} b`` with ``M = L U``.

    ``op`` applies ``A`` then the two triangular solves; ``M^{-1} A`` is never
    formed. ``F = None`` stands for the identity preconditioner.
    """
    b = np.asarray(b, dtype=np.float64)
    rhs = b.copy() if F is None else precond_apply(F, b)
    return _LeftPreconditioned(A, F), rhs
