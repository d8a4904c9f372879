"""
Truncation parameter sweep
==========================

Sketched GMRES builds a cheap, non-orthogonal basis with a truncated Arnoldi
recurrence that orthogonalizes against only the last ``t`` vectors. Used on
its own (restarted), a poor ``t`` can leave it far from convergence. Inside
flexible GMRES the inner solve stops as soon as the basis degenerates
(``cond(S A B_k) >= 1e15``), and the outer loop converges for every ``t``.
"""

import numpy as np

from sketchkrylov import CountingOperator, InnerConfig, Mode, OuterConfig, SGMRESInner, cw_new, solve
from sketchkrylov.io import generate_matrix, generate_rhs

A = generate_matrix("convection-diffusion-2d(32)")
n = A.n_rows
b = generate_rhs("random-normal", n, 0)
S = cw_new(200, n, seed=0)
icfg = InnerConfig(k_max=100)

print(f"{'t':>2} {'variant':>17} {'outer':>5} {'matvecs':>7} {'residual':>10}")
for t in (0, 1, 2, 3):
    for mode, label in ((Mode.FGMRES, "fgmres-sgmres"), (Mode.RESTART, "restarted-sgmres")):
        op = CountingOperator(A)
        _, log = solve(op, b, cfg=OuterConfig(m_max=30, tol=1e-8, mode=mode), inner=SGMRESInner(op, S, icfg, t=t))
        print(f"{t:2d} {label:>17} {len(log):5d} {op.n_matvecs:7d} {log[-1].residual_norm:10.2e}")

# %%
# The inner stop reasons show where the basis gave out.
op = CountingOperator(A)
_, log = solve(op, b, cfg=OuterConfig(m_max=30, tol=1e-8), inner=SGMRESInner(op, S, icfg, t=0))
print("t=0 inner solves:", [(r.inner_k, r.inner_stop_reason) for r in log])
