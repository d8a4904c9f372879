"""Sketched GMRES used as an adaptive inner solver.

Given a right-hand side ``v``, grow a truncated-Arnoldi basis ``B_k`` of
``K_k(A, v)`` and take ``z = B_k y`` with ``y`` minimizing the sketched
residual ``||S v - (S A B_k) y||``. The basis grows until the first of

* ``k`` reaches ``k_max`` (``CAP``),
* ``cond(S A B_k) >= cond_threshold`` (``COND``),
* ``prefactor * residual <= target_bound`` (``TOL``),
* the Arnoldi recurrence breaks down (``BREAKDOWN``).

When several fire at the same ``k`` the order above is reversed in
priority: ``TOL`` wins, then ``COND``, then ``CAP``.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dense import UpdatingQR
from .krylov import KrylovBasis, truncated_arnoldi_extend
from .sketch import sketch_apply
from .sparse import as_operator

__all__ = [
    "StopReason",
    "InnerConfig",
    "InnerResult",
    "sgmres_solve",
    "estimate_true_residual",
]


class StopReason(str, enum.Enum):
    CAP = "CAP"
    COND = "COND"
    TOL = "TOL"
    BREAKDOWN = "BREAKDOWN"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class InnerConfig:
    """Stopping parameters of the inner solve.

    ``target_bound`` is normally filled in per call by the outer loop.
    ``true_residual`` switches the ``TOL`` test from the sketched residual
    to ``||v - A z||`` at the price of one product per inner iteration.
    """

    k_max: int = 500
    cond_threshold: float = 1e15
    cond_check_stride: int = 1
    target_bound: Optional[float] = None
    true_residual: bool = False
    rank_tol: float = 1e-14

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not self.cond_threshold > 1:
            raise ValueError("cond_threshold must exceed 1")
        if self.cond_check_stride < 1:
            raise ValueError("cond_check_stride must be >= 1")


@dataclass
class InnerResult:
    """Outcome of one inner solve ``A z ~= v``.

    ``sketched_residual_norm`` is ``||S(v - A z)||`` for sketched solvers and
    the (unsketched) least-squares residual for classical GMRES; solvers that
    do not estimate their residual leave it ``None``.
    """

    z: np.ndarray
    sketched_residual_norm: Optional[float]
    k_used: int
    stop_reason: StopReason
    true_residual_norm: Optional[float] = None
    cond: Optional[float] = None
    history: list = field(default_factory=list, repr=False)

    @property
    def residual_norm(self):
        """Best available residual: the true one if computed, else the estimate."""
        if self.true_residual_norm is not None:
            return self.true_residual_norm
        return self.sketched_residual_norm


def estimate_true_residual(A, v, z):
    """``||v - A z||`` (one product with ``A``)."""
    A = as_operator(A)
    return float(np.linalg.norm(np.asarray(v, dtype=np.float64) - A.matvec(z)))


def sgmres_solve(A, S, v, cfg, t=2, bound_prefactor=None):
    """Approximately solve ``A z = v`` by sketched GMRES.

    Parameters
    ----------
    A : operator
        Anything accepted by :func:`~sketchkrylov.sparse.as_operator`.
    S : SketchOperator
    v : ndarray
        Right-hand side, nonzero.
    cfg : InnerConfig
    t : int
        Truncation window of the Arnoldi recurrence.
    bound_prefactor : float or None
        Factor multiplying the inner residual in the outer residual bound.
        ``None`` (or a missing ``cfg.target_bound``) disables the ``TOL`` test.

    Returns
    -------
    InnerResult
        ``history`` holds the sketched residual after each ``k``.
    """
    A = as_operator(A)
    v = np.asarray(v, dtype=np.float64)
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise ValueError("inner right-hand side must be nonzero")
    cap = min(cfg.k_max, S.s)
    use_tol = cfg.target_bound is not None and bound_prefactor is not None

    basis = KrylovBasis(v.shape[0], S.s, t, capacity=min(cap, 64))
    basis.append(v / vnorm, A, S)
    qr = UpdatingQR(sketch_apply(S, v), cap)
    history = []
    cond = None
    true_res = None
    reason = None
    while True:
        k = basis.k
        qr.append(basis.sketched_image[:, k - 1])
        check = k % cfg.cond_check_stride == 0
        y, res, c = qr.solve(cfg.rank_tol, use_svd=check)
        if c is not None:
            cond = c
        history.append(res)
        if use_tol:
            measured = res
            if cfg.true_residual:
                true_res = estimate_true_residual(A, v, basis.columns @ y)
                measured = true_res
            if bound_prefactor * measured <= cfg.target_bound:
                reason = StopReason.TOL
        if reason is None and check and cond >= cfg.cond_threshold:
            reason = StopReason.COND
        if reason is None and k >= cap:
            reason = StopReason.CAP
        if reason is not None:
            break
        basis, broke = truncated_arnoldi_extend(A, S, basis)
        if broke:
            reason = StopReason.BREAKDOWN
            break

    if not check and reason is not StopReason.TOL:
        # last solve skipped the SVD; redo it so a near-singular R is truncated
        y, res, cond = qr.solve(cfg.rank_tol, use_svd=True)
        history[-1] = res
    z = basis.columns @ y
    if cfg.true_residual and true_res is None:
        true_res = estimate_true_residual(A, v, z)
    return InnerResult(
        z=z,
        sketched_residual_norm=float(res),
        k_used=basis.k,
        stop_reason=reason,
        true_residual_norm=true_res,
        cond=cond,
        history=history,
    )
