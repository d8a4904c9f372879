"""Flexible GMRES / flexible FOM outer loop and restarting with a variable preconditioner.

The outer loop keeps the flexible Arnoldi relation ``A Z_m = V_{m+1} Hbar_m``
with an orthonormal ``V`` (modified Gram-Schmidt). From it:

* FGMRES takes ``y`` minimizing ``||beta e_1 - Hbar_m y||`` (Givens, progressive residual);
* FFOM takes ``y = H_m^{-1} beta e_1``, whose residual norm is
  ``h_{m+1,m} |gamma_m|`` with ``gamma_m = e_m^T H_m^{-1} beta e_1``;
* the FGMRES residual at step ``m`` satisfies
  ``||r_m|| <= h_{m,m-1} |gamma_{m-1}| ||rhat_m||`` where ``rhat_m = v_m - A z_m``
  is the inner residual, and ``||r_1|| <= beta ||rhat_1||``.

The prefactor ``h_{m,m-1} |gamma_{m-1}|`` (the previous FFOM residual) is known
before ``z_m`` is computed and is handed to the inner solver so it can stop
as soon as the bound drops below the outer tolerance.
"""

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dense import GivensLSQ, hessenberg_solve
from .exceptions import BreakdownError, DimensionError
from .io import ConvergenceRecord
from .sgmres import InnerConfig
from .sparse import as_operator

__all__ = [
    "Mode",
    "OuterConfig",
    "OuterState",
    "outer_step",
    "ffom_residual_norm",
    "fgmres_bound",
    "fgmres_iterate",
    "ffom_iterate",
    "solve",
    "HAPPY_BREAKDOWN_TOL",
]

log = logging.getLogger(__name__)

HAPPY_BREAKDOWN_TOL = 1e-14


class Mode(str, enum.Enum):
    FGMRES = "FGMRES"
    FFOM = "FFOM"
    RESTART = "RESTART"


@dataclass(frozen=True)
class OuterConfig:
    """Outer-loop settings.

    ``tol`` is an absolute target for the residual norm. ``inner`` and ``t``
    describe the sGMRES inner solver when one is built from this config
    (see :func:`sketchkrylov.cli.run`); :func:`solve` itself takes the
    inner solver as an argument.
    """

    m_max: int = 100
    tol: float = 1e-8
    mode: Mode = Mode.FGMRES
    inner: InnerConfig = field(default_factory=InnerConfig)
    t: int = 2
    compute_true_residuals: bool = False

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "mode", Mode(self.mode))


class OuterState:
    """Quantities of the flexible Arnoldi process after ``j`` steps.

    Attributes
    ----------
    V : ndarray, shape (n, m_max + 1)
        Orthonormal basis; columns ``0..j`` are valid (``0..j-1`` after breakdown).
    Z : ndarray, shape (n, m_max)
        Preconditioned directions ``z_1..z_j``.
    H : ndarray, shape (m_max + 1, m_max)
        Hessenberg coefficients; ``Hbar`` is the leading ``(j+1) x j`` block.
    beta : float
        ``||r_0||``.
    gamma : list of float or None
        ``gamma_i = e_i^T H_i^{-1} beta e_1``; ``None`` where ``H_i`` is singular.
    ffom_residuals : list of float or None
        ``h_{i+1,i} |gamma_i|``.
    fgmres_residual_norms : list of float
        Progressive (Givens) FGMRES residuals.
    bound_values : list of float or None
        Bound on each FGMRES residual from the true inner residual.
    inner_residuals : list of float
        True inner residuals ``||v_i - A z_i||``.
    """

    def __init__(self, x0, r0, m_max):
        n = r0.shape[0]
        self.x0 = x0
        self.beta = float(np.linalg.norm(r0))
        self.m_max = int(m_max)
        self.V = np.zeros((n, self.m_max + 1))
        self.Z = np.zeros((n, self.m_max))
        self.H = np.zeros((self.m_max + 1, self.m_max))
        self.V[:, 0] = r0 / self.beta
        self.lsq = GivensLSQ(self.beta, self.m_max)
        self.j = 0
        self.breakdown = False
        self.gamma = []
        self.ffom_residuals = []
        self.fgmres_residual_norms = []
        self.bound_values = []
        self.inner_residuals = []
        self.inner_results = []

    @property
    def Hbar(self):
        return self.H[: self.j + 1, : self.j]

    @property
    def can_continue(self):
        return not self.breakdown and self.j < self.m_max

    def next_prefactor(self):
        """``h_{j+1,j} |gamma_j|`` for the coming step (``beta`` at the first)."""
        if self.j == 0:
            return self.beta
        return self.ffom_residuals[self.j - 1]


def outer_step(state, A, inner, tol=None):
    """Run one flexible Arnoldi step (in place) and return ``state``.

    ``inner(v_j, prefactor, tol)`` provides ``z_j``. A happy breakdown
    (``h_{j+1,j} <= 1e-14 ||A z_j||``, or ``j = n``) sets ``state.breakdown``.
    """
    if not state.can_continue:
        raise RuntimeError("outer iteration cannot be extended")
    A = as_operator(A)
    j = state.j
    v = state.V[:, j]
    prefactor = state.next_prefactor()
    res = inner(v, prefactor, tol)
    z = np.asarray(res.z, dtype=np.float64)
    w = A.matvec(z)
    wnorm = np.linalg.norm(w)
    if wnorm == 0.0:
        raise BreakdownError("inner solver returned a correction annihilated by A")
    inner_true = float(np.linalg.norm(v - w))

    h = np.zeros(j + 2)
    for i in range(j + 1):
        h[i] = state.V[:, i] @ w
        w -= h[i] * state.V[:, i]
    h[j + 1] = np.linalg.norm(w)
    # at j + 1 = n the space is exhausted, whatever rounding left in w
    happy = h[j + 1] <= HAPPY_BREAKDOWN_TOL * wnorm or j + 1 == state.V.shape[0]
    if happy:
        h[j + 1] = 0.0
    else:
        state.V[:, j + 1] = w / h[j + 1]
    state.Z[:, j] = z
    state.H[: j + 2, j] = h
    res_norm = state.lsq.add_column(h)
    state.j = j + 1
    state.breakdown = happy

    try:
        gamma = ffom_gamma(state, j + 1)
        ffom = h[j + 1] * abs(gamma)
    except BreakdownError:
        gamma = ffom = None
    state.gamma.append(gamma)
    state.ffom_residuals.append(ffom)
    state.fgmres_residual_norms.append(float(res_norm))
    state.inner_residuals.append(inner_true)
    state.bound_values.append(None if prefactor is None else prefactor * inner_true)
    state.inner_results.append(res)
    return state


def ffom_gamma(state, j):
    """``gamma_j = e_j^T H_j^{-1} beta e_1`` (``j`` is 1-based)."""
    if not 1 <= j <= state.j:
        raise IndexError(f"step {j} not available (have {state.j})")
    rhs = np.zeros(j)
    rhs[0] = state.beta
    return float(hessenberg_solve(state.H[:j, :j], rhs)[-1])


def ffom_residual_norm(state, j):
    """FFOM residual norm ``h_{j+1,j} |gamma_j|`` at step ``j`` (1-based).

    Raises :class:`BreakdownError` when ``H_j`` is singular.
    """
    return float(state.H[j, j - 1] * abs(ffom_gamma(state, j)))


def fgmres_bound(state, j, inner_residual_norm):
    """Upper bound on the FGMRES residual at step ``j`` (1-based).

    ``beta * ||rhat_1||`` for ``j = 1``, else ``h_{j,j-1} |gamma_{j-1}| ||rhat_j||``.
    Only steps ``< j`` of ``state`` are used, so the bound can be evaluated
    before ``z_j`` is known.
    """
    if j < 1:
        raise ValueError("steps are numbered from 1")
    if j == 1:
        return state.beta * inner_residual_norm
    return ffom_residual_norm(state, j - 1) * inner_residual_norm


def fgmres_iterate(state, j=None):
    """FGMRES approximation ``x_j = x_0 + Z_j y_j`` (``j`` defaults to the last step)."""
    j = state.j if j is None else j
    if j == 0:
        return state.x0.copy()
    y = None
    if j == state.j:
        try:
            y = state.lsq.solve()
        except BreakdownError:
            pass
    if y is None:
        rhs = np.zeros(j + 1)
        rhs[0] = state.beta
        y = np.linalg.lstsq(state.H[: j + 1, :j], rhs, rcond=None)[0]
    return state.x0 + state.Z[:, :j] @ y


def ffom_iterate(state, j=None):
    """FFOM approximation ``x_0 + Z_j H_j^{-1} beta e_1``; raises if ``H_j`` is singular."""
    j = state.j if j is None else j
    if j == 0:
        return state.x0.copy()
    rhs = np.zeros(j)
    rhs[0] = state.beta
    y = hessenberg_solve(state.H[:j, :j], rhs)
    return state.x0 + state.Z[:, :j] @ y


def solve(A, b, x0=None, cfg=None, inner=None, callback=None):
    """Solve ``A x = b`` with an outer FGMRES, FFOM or restart loop.

    Parameters
    ----------
    A : operator
    b : ndarray
    x0 : ndarray, optional
        Initial guess (zero by default).
    cfg : OuterConfig
    inner : callable
        ``inner(v, prefactor, target) -> InnerResult``.
    callback : callable, optional
        Called with every :class:`ConvergenceRecord` as it is produced.

    Returns
    -------
    x : ndarray
    log : list of ConvergenceRecord
        One record per outer step. ``residual_norm`` is the progressive
        FGMRES residual (FGMRES), the FFOM residual formula (FFOM) or
        ``||b - A x_j||`` (RESTART); with ``cfg.compute_true_residuals`` the
        first two are replaced by explicitly computed residuals.
    """
    cfg = cfg or OuterConfig()
    if inner is None:
        raise ValueError("an inner solver is required")
    A = as_operator(A)
    b = np.asarray(b, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise DimensionError(f"operator {A.shape} and right-hand side {b.shape} disagree")
    x0 = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x0.shape != (n,):
        raise DimensionError("initial guess has the wrong shape")
    t_start = time.perf_counter()
    start_count = A.n_matvecs
    r0 = b - A.matvec(x0)
    beta = float(np.linalg.norm(r0))
    if beta == 0.0 or beta <= cfg.tol:
        return x0, []

    def record(j, resnorm, bound, ffom, res):
        rec = ConvergenceRecord(
            outer_index=j,
            residual_norm=float(resnorm),
            bound_value=None if bound is None else float(bound),
            ffom_residual=None if ffom is None else float(ffom),
            inner_k=int(res.k_used),
            inner_stop_reason=str(res.stop_reason),
            cond_SAB=None if res.cond is None else float(res.cond),
            elapsed_seconds=time.perf_counter() - t_start,
            matvec_count=A.n_matvecs - start_count,
        )
        log_.append(rec)
        if callback is not None:
            callback(rec)
        return rec

    log_ = []
    if cfg.mode is Mode.RESTART:
        x = x0.copy()
        r = r0
        for j in range(1, cfg.m_max + 1):
            res = inner(r, 1.0, cfg.tol)
            x = x + res.z
            r = b - A.matvec(x)
            rn = float(np.linalg.norm(r))
            record(j, rn, res.residual_norm, None, res)
            if not np.isfinite(rn):
                log.warning("non-finite residual at restart cycle %d; aborting", j)
                x = x - res.z
                break
            if rn <= cfg.tol:
                break
        return x, log_

    state = OuterState(x0, r0, cfg.m_max)
    last_ffom_ok = 0
    while state.can_continue:
        try:
            outer_step(state, A, inner, cfg.tol)
        except BreakdownError as exc:
            log.warning("outer step %d aborted: %s", state.j + 1, exc)
            break
        j = state.j
        ffom = state.ffom_residuals[-1]
        if ffom is not None:
            last_ffom_ok = j
        if cfg.mode is Mode.FGMRES:
            rn = state.fgmres_residual_norms[-1]
            if cfg.compute_true_residuals:
                rn = np.linalg.norm(b - A.matvec(fgmres_iterate(state)))
        else:
            rn = np.inf if ffom is None else ffom
            if cfg.compute_true_residuals and ffom is not None:
                rn = np.linalg.norm(b - A.matvec(ffom_iterate(state)))
        record(j, rn, state.bound_values[-1], ffom, state.inner_results[-1])
        if not np.isfinite(rn) and (cfg.mode is Mode.FGMRES or ffom is not None):
            log.warning("non-finite residual at outer step %d; aborting", j)
            break
        if rn <= cfg.tol:
            break

    if state.j == 0:
        return x0, log_
    if cfg.mode is Mode.FGMRES:
        return fgmres_iterate(state), log_
    if last_ffom_ok == 0:
        return x0, log_
    return ffom_iterate(state, last_ffom_ok), log_
