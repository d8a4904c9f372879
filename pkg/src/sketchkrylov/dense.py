"""Small dense kernels: least squares, Hessenberg systems and condition numbers."""

import numpy as np
import scipy.linalg as sla

from .exceptions import BreakdownError, DimensionError

__all__ = [
    "qr_least_squares",
    "hessenberg_lsq_step",
    "hessenberg_solve",
    "cond2",
    "givens",
    "GivensLSQ",
    "UpdatingQR",
]

_EPS = np.finfo(np.float64).eps


def qr_least_squares(M, rhs, rank_tol=1e-14):
    """Minimum-norm least-squares solution of ``M y ~= rhs``.

    Uses a column-pivoted Householder QR. Trailing diagonal entries of R
    below ``rank_tol * |R[0, 0]|`` are treated as zero and the problem is
    solved on the detected rank with a complete orthogonal decomposition,
    which gives the pseudoinverse solution.

    Returns
    -------
    solution : ndarray
    residual_norm : float
        ``||rhs - M @ solution||``, evaluated explicitly.
    rank : int
    """
    M = np.asarray(M, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError("M must be two-dimensional")
    m, n = M.shape
    if m < n:
        raise DimensionError(f"need n_rows >= n_cols, got {M.shape}")
    if rhs.shape != (m,):
        raise DimensionError(f"rhs has shape {rhs.shape}, expected ({m},)")
    if n == 0 or not np.any(M):
        return np.zeros(n), float(np.linalg.norm(rhs)), 0

    Q, R, perm = sla.qr(M, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.count_nonzero(d > rank_tol * d[0]))
    c = Q[:, :rank].T @ rhs
    if rank == n:
        yp = sla.solve_triangular(R, c)
    else:
        # min-norm solution of the wide system R[:rank] yp = c
        Q2, R2 = sla.qr(R[:rank].T, mode="economic")
        yp = Q2 @ sla.solve_triangular(R2, c, trans="T")
    y = np.empty(n)
    y[perm] = yp
    res = float(np.linalg.norm(rhs - M @ y))
    return y, res, rank


def givens(a, b):
    """Rotation ``(c, s)`` with ``[c s; -s c] @ [a; b] = [r; 0]``, ``r >= 0``."""
    r = np.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


class GivensLSQ:
    """Progressive solution of ``min ||beta e_1 - Hbar y||`` for growing Hessenberg ``Hbar``.

    Each :meth:`add_column` costs O(j) and returns the new least-squares
    residual without forming ``y``.
    """

    def __init__(self, beta, max_cols):
        self.R = np.zeros((max_cols, max_cols))
        self.cs = np.zeros(max_cols)
        self.sn = np.zeros(max_cols)
        self.g = np.zeros(max_cols + 1)
        self.g[0] = beta
        self.ncols = 0

    def add_column(self, h):
        """Append Hessenberg column ``h`` (length ``j + 2`` for the j-th column, 0-based)."""
        j = self.ncols
        h = np.array(h, dtype=np.float64)
        if h.shape != (j + 2,):
            raise DimensionError(f"column {j} must have {j + 2} entries")
        for i in range(j):
            t = self.cs[i] * h[i] + self.sn[i] * h[i + 1]
            h[i + 1] = -self.sn[i] * h[i] + self.cs[i] * h[i + 1]
            h[i] = t
        c, s, r = givens(h[j], h[j + 1])
        self.cs[j], self.sn[j] = c, s
        self.R[: j + 1, j] = h[: j + 1]
        self.R[j, j] = r
        self.g[j + 1] = -s * self.g[j]
        self.g[j] = c * self.g[j]
        self.ncols = j + 1
        return abs(self.g[j + 1])

    @property
    def residual(self):
        return abs(self.g[self.ncols])

    def solve(self):
        j = self.ncols
        R = self.R[:j, :j]
        if j and np.min(np.abs(np.diag(R))) == 0.0:
            raise BreakdownError("singular reduced triangle in Hessenberg least squares")
        return sla.solve_triangular(R, self.g[:j])


def _check_hessenberg(H):
    if np.any(np.tril(H, -2)):
        raise ValueError("matrix is not upper Hessenberg")


def hessenberg_lsq_step(Hbar, beta):
    """Solve ``min_y ||beta e_1 - Hbar y||`` for an ``(m+1) x m`` Hessenberg ``Hbar``.

    Returns ``(y, lsq_residual)``; the residual is the progressive Givens
    value. Raises :class:`BreakdownError` if the rotated triangle is exactly
    singular.
    """
    Hbar = np.asarray(Hbar, dtype=np.float64)
    if Hbar.ndim != 2 or Hbar.shape[0] != Hbar.shape[1] + 1:
        raise DimensionError(f"expected an (m+1) x m matrix, got {Hbar.shape}")
    _check_hessenberg(Hbar)
    m = Hbar.shape[1]
    lsq = GivensLSQ(beta, m)
    for j in range(m):
        lsq.add_column(Hbar[: j + 2, j])
    return lsq.solve(), lsq.residual


def hessenberg_solve(H, rhs):
    """Solve the square upper-Hessenberg system ``H y = rhs``.

    Givens rotations reduce ``H`` to triangular form, then back substitution.
    A pivot that is zero relative to ``eps * ||H||`` raises :class:`BreakdownError`.
    """
    H = np.array(H, dtype=np.float64)
    rhs = np.array(rhs, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"expected a square matrix, got {H.shape}")
    m = H.shape[0]
    if rhs.shape != (m,):
        raise DimensionError(f"rhs has shape {rhs.shape}, expected ({m},)")
    _check_hessenberg(H)
    for i in range(m - 1):
        c, s, r = givens(H[i, i], H[i + 1, i])
        top = c * H[i, i:] + s * H[i + 1, i:]
        H[i + 1, i:] = -s * H[i, i:] + c * H[i + 1, i:]
        H[i, i:] = top
        H[i + 1, i] = 0.0
        rhs[i], rhs[i + 1] = c * rhs[i] + s * rhs[i + 1], -s * rhs[i] + c * rhs[i + 1]
    scale = np.max(np.abs(H)) if m else 0.0
    if m and np.min(np.abs(np.diag(H))) <= _EPS * scale:
        raise BreakdownError("Hessenberg matrix is singular")
    return sla.solve_triangular(H, rhs)


def cond2(M):
    """2-norm condition number ``sigma_max / sigma_min``.

    Tall matrices are first reduced to their R factor, whose singular values
    are those of ``M``. A zero smallest singular value gives ``inf``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("cond2 needs a non-empty 2-d matrix")
    if M.shape[0] > M.shape[1]:
        M = sla.qr(M, mode="r")[0][: M.shape[1]]
    sv = sla.svdvals(M)
    if sv[-1] == 0.0:
        return np.inf
    return float(sv[0] / sv[-1])


class UpdatingQR:
    """Householder QR of a tall matrix that grows one column at a time.

    Keeps ``Q^T rhs`` up to date as well, so the least-squares residual of
    ``min ||rhs - M y||`` is available after every append. Appending the
    k-th column costs O(s k).

    Parameters
    ----------
    rhs : ndarray, shape (s,)
    max_cols : int
        Capacity; must not exceed ``s``.
    """

    def __init__(self, rhs, max_cols):
        rhs = np.asarray(rhs, dtype=np.float64)
        s = rhs.shape[0]
        if max_cols > s:
            raise ValueError("cannot hold more columns than rows")
        self.s = s
        self.k = 0
        self._V = np.zeros((s, max_cols))
        self._tau = np.zeros(max_cols)
        self.R = np.zeros((max_cols, max_cols))
        self.c = rhs.copy()

    def append(self, col):
        k = self.k
        if k == self._tau.size:
            raise ValueError("UpdatingQR is full")
        x = np.array(col, dtype=np.float64)
        for i in range(k):
            v = self._V[i:, i]
            x[i:] -= (self._tau[i] * (v @ x[i:])) * v
        tail = x[k:]
        norm = np.linalg.norm(tail)
        if norm == 0.0:
            alpha, tau = 0.0, 0.0
            v = np.zeros_like(tail)
        else:
            alpha = -norm if tail[0] >= 0 else norm
            v = tail.copy()
            v[0] -= alpha
            tau = 2.0 / (v @ v)
        self._V[k:, k] = v
        self._tau[k] = tau
        self.R[:k, k] = x[:k]
        self.R[k, k] = alpha
        ck = self.c[k:]
        ck -= (tau * (v @ ck)) * v
        self.k = k + 1

    @property
    def residual(self):
        """Least-squares residual assuming the current R is nonsingular."""
        return float(np.linalg.norm(self.c[self.k:]))

    def singular_values(self):
        return sla.svdvals(self.R[: self.k, : self.k])

    def solve(self, rank_tol=1e-14, use_svd=False):
        """Least-squares solve on the current columns.

        With ``use_svd`` (or a zero pivot) the pseudoinverse of R is applied,
        discarding singular values below ``rank_tol * sigma_max``.

        Returns ``(y, residual_norm, cond)``; ``cond`` is ``None`` unless
        singular values were computed.
        """
        k = self.k
        R = self.R[:k, :k]
        ck = self.c[:k]
        tail2 = float(self.c[k:] @ self.c[k:])
        if not use_svd and np.all(np.diag(R) != 0.0):
            y = sla.solve_triangular(R, ck)
            if np.all(np.isfinite(y)):
                return y, np.sqrt(tail2), None
        U, sv, Wt = np.linalg.svd(R)
        cond = np.inf if sv[-1] == 0.0 else float(sv[0] / sv[-1])
        if sv[0] == 0.0:
            return np.zeros(k), np.sqrt(tail2 + float(ck @ ck)), cond
        keep = sv > rank_tol * sv[0]
        y = Wt[keep].T @ ((U[:, keep].T @ ck) / sv[keep])
        d = ck - R @ y
        return y, float(np.sqrt(tail2 + d @ d)), cond
