"""Randomized Krylov solvers: FGMRES wrapped around sketched GMRES.

The outer flexible GMRES (or flexible FOM) loop turns an adaptive,
possibly unstable sketched-GMRES inner solve into a method with
non-increasing residual norms, and a cheap residual bound decides when
the inner solve may stop.
"""

from .dense import cond2, hessenberg_lsq_step, hessenberg_solve, qr_least_squares
from .exceptions import BreakdownError, DimensionError, MatrixMarketError, ZeroPivotError
from .fgmres import (
    Mode,
    OuterConfig,
    OuterState,
    fgmres_bound,
    ffom_iterate,
    ffom_residual_norm,
    fgmres_iterate,
    outer_step,
    solve,
)
from .inner import DirectInner, GMRESInner, IdentityInner, SGMRESInner, gmres_solve
from .io import (
    ConvergenceRecord,
    ProblemSpec,
    generate_problem,
    read_matrix_market,
    read_records,
    write_matrix_market,
    write_records,
)
from .krylov import KrylovBasis, build_basis, truncated_arnoldi_extend
from .precond import Ilu0Factors, ilu0_factor, left_preconditioned_system, precond_apply
from .sgmres import InnerConfig, InnerResult, StopReason, estimate_true_residual, sgmres_solve
from .sketch import SketchOperator, cw_new, sketch_apply, sketch_apply_block
from .sparse import CountingOperator, SparseMatrix, as_operator, from_triplets, matvec

__version__ = "0.1.0"
