"""
ILU(0) left preconditioning
===========================

An incomplete LU factorization with no fill-in is cheap to build and to
apply. Left preconditioning swaps ``A x = b`` for ``M^{-1} A x = M^{-1} b``;
the operator applies ``A`` and then two sparse triangular solves.
"""

import numpy as np

from sketchkrylov import (
    CountingOperator,
    InnerConfig,
    OuterConfig,
    SGMRESInner,
    ilu0_factor,
    left_preconditioned_system,
    solve,
)
from sketchkrylov.io import generate_matrix

A = generate_matrix("convection-diffusion-2d(48, 5)")
b = np.ones(A.n_rows)
F = ilu0_factor(A)

for label, (op, rhs) in (("none", left_preconditioned_system(A, b)), ("ilu0", left_preconditioned_system(A, b, F))):
    op = CountingOperator(op)
    x, log = solve(op, rhs, cfg=OuterConfig(m_max=100, tol=1e-8 * np.linalg.norm(rhs)),
                   inner=SGMRESInner(op, cfg=InnerConfig(k_max=20), seed=1))
    print(f"{label:>5}: {len(log):3d} outer, {op.n_matvecs:5d} products, "
          f"||b - A x|| / ||b|| = {np.linalg.norm(b - A @ x) / np.linalg.norm(b):.2e}")
