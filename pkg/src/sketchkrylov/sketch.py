"""Clarkson-Woodruff (CountSketch) embeddings.

Every column of the ``s x n`` operator has a single nonzero ``+-1`` in a
uniformly random row, so applying it to a vector is one pass of signed
bucket sums. The operator is stored per column (target row and sign) and
regenerated bit-for-bit from ``(s, n, seed)`` with a counter-based Philox
generator.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError

__all__ = ["SketchOperator", "cw_new", "sketch_apply", "sketch_apply_block"]


@dataclass(frozen=True, eq=False)
class SketchOperator:
    s: int
    n: int
    row_of: np.ndarray
    sign_of: np.ndarray
    seed: int

    @property
    def shape(self):
        return (self.s, self.n)

    def apply(self, v):
        return sketch_apply(self, v)

    def __matmul__(self, v):
        v = np.asarray(v)
        return sketch_apply_block(self, v) if v.ndim == 2 else sketch_apply(self, v)

    def toarray(self):
        """Dense ``s x n`` matrix; for tests and small problems only."""
        M = np.zeros((self.s, self.n))
        M[self.row_of, np.arange(self.n)] = self.sign_of
        return M


def cw_new(s, n, seed=0):
    """Draw a Clarkson-Woodruff sketch with ``s`` rows for vectors of length ``n``."""
    s, n = int(s), int(n)
    if s <= 0:
        raise ValueError("sketch dimension s must be positive")
    if s > n:
        raise ValueError(f"sketch dimension s={s} exceeds ambient dimension n={n}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    row_of = rng.integers(0, s, size=n, dtype=np.int64)
    sign_of = np.where(rng.integers(0, 2, size=n, dtype=np.int8) == 1, 1.0, -1.0)
    row_of.setflags(write=False)
    sign_of.setflags(write=False)
    return SketchOperator(s, n, row_of, sign_of, int(seed))


def sketch_apply(S, v):
    """``S @ v`` in one pass over ``v``."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != S.n:
        raise DimensionError(f"sketch of width {S.n} applied to vector of shape {v.shape}")
    return np.bincount(S.row_of, weights=S.sign_of * v, minlength=S.s)


def sketch_apply_block(S, M):
    """Sketch every column of the ``n x k`` array ``M``.

    Column ``j`` of the result is exactly ``sketch_apply(S, M[:, j])``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != S.n:
        raise DimensionError(f"sketch of width {S.n} applied to block of shape {M.shape}")
    out = np.empty((S.s, M.shape[1]))
    for j in range(M.shape[1]):
        out[:, j] = sketch_apply(S, M[:, j])
    return out
