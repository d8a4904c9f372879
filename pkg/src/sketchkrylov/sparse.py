"""Compressed-row sparse matrices and the operator wrapper used by the solvers."""

import numpy as np
import scipy.sparse as sp

from .exceptions import BreakdownError, DimensionError

__all__ = [
    "SparseMatrix",
    "from_triplets",
    "matvec",
    "CountingOperator",
    "as_operator",
]


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class SparseMatrix:
    """Immutable CSR matrix in canonical form.

    Column indices are sorted and unique within each row. Products go
    through a scipy CSR view that shares the (read-only) buffers.

    Parameters
    ----------
    n_rows, n_cols : int
    row_offsets : array of int, length ``n_rows + 1``
    col_indices : array of int, length ``nnz``
    values : array of float, length ``nnz``
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values", "_csr")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values):
        n_rows, n_cols = int(n_rows), int(n_cols)
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        row_offsets = _readonly(row_offsets, np.int64)
        col_indices = _readonly(col_indices, np.int64)
        values = _readonly(values, np.float64)
        if row_offsets.shape != (n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        nnz = col_indices.size
        if values.size != nnz:
            raise ValueError("col_indices and values differ in length")
        if row_offsets[0] != 0 or row_offsets[-1] != nnz:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(row_offsets) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if nnz and (col_indices.min() < 0 or col_indices.max() >= n_cols):
            raise ValueError("column index out of range")
        if np.isnan(values).any():
            raise ValueError("values contain NaN")
        # strictly increasing columns within each row
        if nnz > 1:
            step = np.diff(col_indices)
            row_start = np.zeros(nnz, dtype=bool)
            row_start[row_offsets[1:-1][row_offsets[1:-1] < nnz]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing within rows")
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.row_offsets = row_offsets
        self.col_indices = col_indices
        self.values = values
        self._csr = sp.csr_matrix(
            (values, col_indices, row_offsets), shape=(n_rows, n_cols), copy=False
        )

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_indices.size)

    def matvec(self, x):
        return matvec(self, x)

    def __matmul__(self, x):
        return matvec(self, x)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"

    def row(self, i):
        """Return ``(col_indices, values)`` of row ``i`` (read-only views)."""
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def diagonal(self):
        return self._csr.diagonal()

    def toarray(self):
        return self._csr.toarray()

    def to_scipy(self):
        """A scipy CSR copy, safe to mutate."""
        return self._csr.copy()

    @classmethod
    def from_scipy(cls, M):
        M = sp.csr_matrix(M, dtype=np.float64, copy=True)
        M.sum_duplicates()
        M.sort_indices()
        return cls(M.shape[0], M.shape[1], M.indptr, M.indices, M.data)

    @classmethod
    def from_dense(cls, M, keep_zeros=False):
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2:
            raise DimensionError("expected a 2-d array")
        if keep_zeros:
            n, m = M.shape
            indptr = np.arange(0, n * m + 1, m, dtype=np.int64)
            indices = np.tile(np.arange(m, dtype=np.int64), n)
            return cls(n, m, indptr, indices, M.ravel())
        return cls.from_scipy(sp.csr_matrix(M))

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))


def from_triplets(n_rows, n_cols, triplets):
    """Assemble a canonical :class:`SparseMatrix` from ``(i, j, value)`` triplets.

    Duplicate positions are summed. Explicitly stored zeros survive, so the
    pattern is exactly the set of positions that were mentioned.
    """
    n_rows, n_cols = int(n_rows), int(n_cols)
    trip = list(triplets)
    if not trip:
        return SparseMatrix(n_rows, n_cols, np.zeros(n_rows + 1, np.int64), [], [])
    rows = np.fromiter((t[0] for t in trip), dtype=np.int64, count=len(trip))
    cols = np.fromiter((t[1] for t in trip), dtype=np.int64, count=len(trip))
    vals = np.fromiter((t[2] for t in trip), dtype=np.float64, count=len(trip))
    return _from_coo(n_rows, n_cols, rows, cols, vals)


def _from_coo(n_rows, n_cols, rows, cols, vals):
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        bad = int(np.flatnonzero((rows < 0) | (rows >= n_rows))[0])
        raise IndexError(f"row index {rows[bad]} out of range for {n_rows} rows")
    if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
        bad = int(np.flatnonzero((cols < 0) | (cols >= n_cols))[0])
        raise IndexError(f"column index {cols[bad]} out of range for {n_cols} columns")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new = np.ones(rows.size, dtype=bool)
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
    counts = np.bincount(rows, minlength=n_rows)
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return SparseMatrix(n_rows, n_cols, offsets, cols, vals)


def matvec(A, x):
    """``y = A @ x`` for a :class:`SparseMatrix`.

    Raises
    ------
    DimensionError
        If ``x`` does not have ``A.n_cols`` entries.
    BreakdownError
        If the product contains NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.n_cols:
        raise DimensionError(f"cannot multiply {A.shape} matrix by vector of shape {x.shape}")
    y = A._csr @ x
    if np.isnan(y).any():
        raise BreakdownError("matrix-vector product produced NaN")
    return y


class CountingOperator:
    """Wrap a square linear map and count how often it is applied.

    ``A`` may be a :class:`SparseMatrix`, a scipy sparse matrix or
    ``LinearOperator``, a dense array, another ``CountingOperator`` or any
    object with ``shape`` and ``matvec``. A bare callable needs ``shape``.
    """

    def __init__(self, A, shape=None):
        if isinstance(A, np.ndarray):
            M = np.asarray(A, dtype=np.float64)
            self._apply = M.dot
            shape = M.shape
        elif sp.issparse(A):
            M = sp.csr_matrix(A, dtype=np.float64)
            self._apply = M.dot
            shape = M.shape
        elif hasattr(A, "matvec"):
            self._apply = A.matvec
            shape = A.shape if shape is None else shape
        elif callable(A):
            if shape is None:
                raise ValueError("shape is required for a bare callable")
            self._apply = A
        else:
            raise TypeError(f"cannot use {type(A).__name__} as a linear operator")
        self.shape = tuple(int(s) for s in shape)
        self.n_matvecs = 0

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.shape[1]:
            raise DimensionError(f"operator of shape {self.shape} applied to vector of shape {x.shape}")
        y = np.asarray(self._apply(x), dtype=np.float64).reshape(-1)
        self.n_matvecs += 1
        if not np.all(np.isfinite(y)):
            raise BreakdownError("operator application produced non-finite values")
        return y

    __call__ = matvec

    def __matmul__(self, x):
        return self.matvec(x)


def as_operator(A, shape=None):
    """Return ``A`` as a :class:`CountingOperator` (unchanged if it already is one)."""
    if isinstance(A, CountingOperator):
        return A
    return CountingOperator(A, shape=shape)
