"""Truncated Arnoldi bases with their sketches kept alongside.

Each new direction ``A b_k`` is orthogonalized (classical Gram-Schmidt,
one pass) against only the last ``t`` basis vectors and then normalized.
With ``t = 0`` this is the normalized power sequence. For every column
``b_j`` the basis also stores ``S b_j`` and ``S A b_j``; the product
``A b_j`` is computed once, when ``b_j`` is appended, and reused to
generate ``b_{j+1}``.
"""

import numpy as np

from .sketch import sketch_apply
from .sparse import as_operator

__all__ = ["KrylovBasis", "truncated_arnoldi_extend", "build_basis", "BREAKDOWN_TOL"]

BREAKDOWN_TOL = 1e-300
_CANCEL = 16 * np.finfo(np.float64).eps


class KrylovBasis:
    """Unit-norm (generally non-orthogonal) Krylov basis ``B_k``.

    Attributes
    ----------
    columns : ndarray, shape (n, k)
    sketched_basis : ndarray, shape (s, k)
        ``S @ columns``.
    sketched_image : ndarray, shape (s, k)
        ``S @ A @ columns``.
    t : int
        Truncation window of the Arnoldi recurrence.
    """

    def __init__(self, n, s, t, capacity=16):
        if t < 0:
            raise ValueError("truncation parameter t must be >= 0")
        self.t = int(t)
        self.k = 0
        self._B = np.empty((n, capacity))
        self._SB = np.empty((s, capacity))
        self._SAB = np.empty((s, capacity))
        self._last_image = None

    @property
    def columns(self):
        return self._B[:, : self.k]

    @property
    def sketched_basis(self):
        return self._SB[:, : self.k]

    @property
    def sketched_image(self):
        return self._SAB[:, : self.k]

    @property
    def last_image(self):
        """``A @ columns[:, -1]``, kept so the next extension costs no extra product."""
        return self._last_image

    def __len__(self):
        return self.k

    def _grow(self):
        cap = self._B.shape[1]
        for name in ("_B", "_SB", "_SAB"):
            old = getattr(self, name)
            new = np.empty((old.shape[0], 2 * cap))
            new[:, :cap] = old
            setattr(self, name, new)

    def append(self, b, A, S):
        """Store unit vector ``b`` and its sketches. Costs one product with ``A``."""
        if self.k == self._B.shape[1]:
            self._grow()
        Ab = A.matvec(b)
        k = self.k
        self._B[:, k] = b
        self._SB[:, k] = sketch_apply(S, b)
        self._SAB[:, k] = sketch_apply(S, Ab)
        self._last_image = Ab
        self.k = k + 1


def truncated_arnoldi_extend(A, S, basis):
    """Append one truncated-Arnoldi vector to ``basis`` (in place).

    Returns ``(basis, breakdown)``. On breakdown (the orthogonalized
    direction is zero up to rounding: below ``BREAKDOWN_TOL`` or below
    ``16 eps ||A b_k||``) the basis is left unchanged.
    """
    if basis.k < 1:
        raise ValueError("basis must hold at least one column")
    A = as_operator(A)
    w = basis.last_image.copy()
    scale = np.linalg.norm(w)
    lo = max(0, basis.k - basis.t)
    if lo < basis.k:
        W = basis.columns[:, lo:]
        w -= W @ (W.T @ w)
    nrm = np.linalg.norm(w)
    # rounding-level remainder after projection counts as exact cancellation
    if not (nrm >= BREAKDOWN_TOL and nrm > _CANCEL * scale):
        return basis, True
    basis.append(w / nrm, A, S)
    return basis, False


def build_basis(A, S, v, k_target, t):
    """Truncated-Arnoldi basis of ``K_k(A, v)`` with up to ``k_target`` columns.

    Stops early on breakdown (an invariant subspace was found).
    """
    A = as_operator(A)
    v = np.asarray(v, dtype=np.float64)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("starting vector must be nonzero")
    basis = KrylovBasis(v.shape[0], S.s, t, capacity=max(1, int(k_target)))
    basis.append(v / nrm, A, S)
    while basis.k < k_target:
        basis, broke = truncated_arnoldi_extend(A, S, basis)
        if broke:
            break
    return basis
