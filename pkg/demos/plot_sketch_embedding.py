"""
How well does a CountSketch embed a subspace?
=============================================

A Clarkson-Woodruff sketch with ``s`` rows maps every vector of a
``d``-dimensional subspace to ``s`` numbers while roughly keeping its norm.
The singular values of ``S Q`` (``Q`` an orthonormal basis) measure the
distortion: all of them equal to one means a perfect embedding.
"""

import numpy as np

from sketchkrylov import cw_new, sketch_apply_block

n, d = 100_000, 50
Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((n, d)))

print(f"{'s':>5} {'s/d':>4} {'min sv':>7} {'max sv':>7}")
for s in (100, 200, 500, 1000, 4000):
    sv = np.concatenate([np.linalg.svd(sketch_apply_block(cw_new(s, n, seed=k), Q), compute_uv=False) for k in range(10)])
    print(f"{s:5d} {s // d:4d} {sv.min():7.3f} {sv.max():7.3f}")
