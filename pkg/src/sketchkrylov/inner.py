"""Inner solvers ("variable preconditioners") for the outer flexible loop.

An inner solver is any callable ``inner(v, prefactor, target)`` returning an
:class:`~sketchkrylov.sgmres.InnerResult` with ``z ~= A^{-1} v``.
``prefactor`` multiplies the inner residual in the outer residual bound
(``None`` when the bound is unavailable) and ``target`` is the outer
tolerance; solvers that can stop early use the pair to do so.
"""

from dataclasses import replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dense import GivensLSQ
from .sgmres import InnerConfig, InnerResult, StopReason, estimate_true_residual, sgmres_solve
from .sketch import cw_new
from .sparse import SparseMatrix, as_operator

__all__ = ["gmres_solve", "SGMRESInner", "GMRESInner", "IdentityInner", "DirectInner"]


def gmres_solve(A, v, k, prefactor=None, target=None, true_residual=False):
    """``k`` steps of classical (unrestarted) GMRES for ``A z = v`` from ``z = 0``.

    Arnoldi with modified Gram-Schmidt; the residual is tracked with Givens
    rotations. Stops early on breakdown or once ``prefactor * residual <= target``.
    ``history`` of the result lists the residual after every step.
    """
    A = as_operator(A)
    v = np.asarray(v, dtype=np.float64)
    beta = np.linalg.norm(v)
    if beta == 0.0:
        raise ValueError("inner right-hand side must be nonzero")
    n = v.shape[0]
    k = int(min(k, n))
    V = np.empty((n, k + 1))
    V[:, 0] = v / beta
    lsq = GivensLSQ(beta, k)
    history = []
    reason = StopReason.CAP
    use_tol = prefactor is not None and target is not None
    for j in range(k):
        w = A.matvec(V[:, j])
        h = np.zeros(j + 2)
        for i in range(j + 1):
            h[i] = V[:, i] @ w
            w -= h[i] * V[:, i]
        h[j + 1] = np.linalg.norm(w)
        res = lsq.add_column(h)
        history.append(res)
        if h[j + 1] <= 1e-14 * np.linalg.norm(h):
            reason = StopReason.BREAKDOWN
            break
        V[:, j + 1] = w / h[j + 1]
        if use_tol and prefactor * res <= target:
            reason = StopReason.TOL
            break
    m = lsq.ncols
    z = V[:, :m] @ lsq.solve()
    true_res = estimate_true_residual(A, v, z) if true_residual else None
    return InnerResult(z, float(lsq.residual), m, reason, true_res, None, history)


class SGMRESInner:
    """Sketched GMRES as inner solver, with C1-C3 stopping.

    Parameters
    ----------
    A : operator
    S : SketchOperator, optional
        Drawn as a Clarkson-Woodruff sketch with ``s = 2 k_max`` rows
        (capped at ``n``) from ``seed`` when omitted.
    cfg : InnerConfig
    t : int
    use_tol : bool
        Pass the outer target through (C3). Without it only C1/C2 stop.
    """

    def __init__(self, A, S=None, cfg=None, t=2, seed=0, use_tol=True):
        self.A = as_operator(A)
        self.cfg = cfg or InnerConfig()
        if S is None:
            n = self.A.shape[0]
            S = cw_new(min(2 * self.cfg.k_max, n), n, seed)
        self.S = S
        self.t = t
        self.use_tol = use_tol

    def __call__(self, v, prefactor=None, target=None):
        cfg = self.cfg
        if self.use_tol and target is not None:
            cfg = replace(cfg, target_bound=target)
        return sgmres_solve(self.A, self.S, v, cfg, self.t, prefactor)


class GMRESInner:
    """``k`` steps of classical GMRES; ``use_tol`` enables early stopping."""

    def __init__(self, A, k, use_tol=False, true_residual=False):
        self.A = as_operator(A)
        self.k = int(k)
        self.use_tol = use_tol
        self.true_residual = true_residual

    def __call__(self, v, prefactor=None, target=None):
        if not self.use_tol:
            prefactor = target = None
        return gmres_solve(self.A, v, self.k, prefactor, target, self.true_residual)


class IdentityInner:
    """``z = v``: the outer loop then reduces to classical GMRES."""

    def __call__(self, v, prefactor=None, target=None):
        return InnerResult(np.array(v, dtype=np.float64), None, 0, StopReason.CAP)


class DirectInner:
    """Exact solve with an LU factorization of ``A`` (small problems)."""

    def __init__(self, A):
        if isinstance(A, SparseMatrix):
            A = A.to_scipy()
        if sp.issparse(A):
            lu = spla.splu(sp.csc_matrix(A, dtype=np.float64))
            self._solve = lu.solve
        else:
            lu = sla.lu_factor(np.asarray(A, dtype=np.float64))
            self._solve = lambda r: sla.lu_solve(lu, r)

    def __call__(self, v, prefactor=None, target=None):
        z = self._solve(np.asarray(v, dtype=np.float64))
        return InnerResult(z, 0.0, 0, StopReason.CAP)
