"""Problem ingestion and generation, and convergence-record files.

Matrices are read from Matrix Market coordinate files (real, general /
symmetric / skew-symmetric). Synthetic problems come from named generators:

``randn-shifted(sigma)``
    dense standard-normal ``n x n`` matrix plus ``sigma * I``.
``diag(range)``
    ``diag(1, 2, ..., n)``.
``convection-diffusion-2d(grid[, c])``
    5-point central-difference discretization of ``-Lap u + c (u_x + u_y)`` on
    a ``grid x grid`` interior mesh of the unit square, Dirichlet boundary,
    scaled by ``h^2``; ``n = grid^2`` and ``c`` defaults to 1 (diffusion-dominated).

Random numbers come from ``numpy.random.Generator(Philox(seed))``; normals
use numpy's ziggurat sampler. Results are reproducible bit-for-bit for a
given numpy build.
"""

import csv
import dataclasses
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import MatrixMarketError
from .sparse import SparseMatrix, _from_coo

__all__ = [
    "read_matrix_market",
    "write_matrix_market",
    "ProblemSpec",
    "generate_problem",
    "generate_matrix",
    "generate_rhs",
    "ConvergenceRecord",
    "RECORD_FIELDS",
    "write_records",
    "read_records",
]

_INT64_MAX = np.iinfo(np.int64).max


# -- Matrix Market -----------------------------------------------------------

def _parse_int(tok, lineno, what):
    try:
        v = int(tok)
    except ValueError:
        raise MatrixMarketError(f"{what} {tok!r} is not an integer", lineno) from None
    if v < 0 or v > _INT64_MAX:
        raise MatrixMarketError(f"{what} {tok!r} out of range", lineno)
    return v


def read_matrix_market(path):
    """Read a real coordinate Matrix Market file into a :class:`SparseMatrix`.

    Symmetric and skew-symmetric storage is expanded to full storage.
    Duplicate entries are summed.

    Raises
    ------
    MatrixMarketError
        For a malformed banner or size line, unsupported field or format
        (complex, pattern, integer-overflowing sizes, array format) and
        bad entry lines; the message carries the line number.
    """
    path = Path(path)
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    banner = lines[0].strip().split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket banner", 1)
    obj, fmt, field, symm = (b.lower() for b in banner[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", 1)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r} (only coordinate)", 1)
    if field in ("complex", "pattern"):
        raise MatrixMarketError(f"{field} matrices are not supported", 1)
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"unknown field {field!r}", 1)
    if symm not in ("general", "symmetric", "skew-symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symm!r}", 1)

    i = 1
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("%")):
        i += 1
    if i == len(lines):
        raise MatrixMarketError("missing size line", i + 1)
    size = lines[i].split()
    if len(size) != 3:
        raise MatrixMarketError("size line must hold rows, columns and entries", i + 1)
    n_rows, n_cols, nnz = (_parse_int(t, i + 1, w) for t, w in zip(size, ("rows", "columns", "entries")))
    if symm != "general" and n_rows != n_cols:
        raise MatrixMarketError(f"{symm} matrix must be square", i + 1)
    body_start = i + 1

    body = lines[body_start:]
    rows = cols = vals = None
    try:
        data = np.array(" ".join(l for l in body if l.strip() and not l.lstrip().startswith("%")).split(),
                        dtype=np.float64)
        if data.size == 3 * nnz:
            data = data.reshape(nnz, 3)
            rows, cols, vals = data[:, 0], data[:, 1], data[:, 2]
            if not (np.all(rows == np.round(rows)) and np.all(cols == np.round(cols))):
                rows = None
    except ValueError:
        rows = None
    if rows is None:
        rows, cols, vals = _scan_entries(body, body_start, nnz)
    rows = rows.astype(np.int64) - 1
    cols = cols.astype(np.int64) - 1
    bad = np.flatnonzero((rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols))
    if bad.size:
        lineno = _entry_line(body, body_start, int(bad[0]))
        raise MatrixMarketError(f"index ({rows[bad[0]] + 1}, {cols[bad[0]] + 1}) out of bounds", lineno)
    if np.isnan(vals).any():
        lineno = _entry_line(body, body_start, int(np.flatnonzero(np.isnan(vals))[0]))
        raise MatrixMarketError("NaN value", lineno)
    if symm != "general":
        if symm == "skew-symmetric" and np.any(rows == cols):
            lineno = _entry_line(body, body_start, int(np.flatnonzero(rows == cols)[0]))
            raise MatrixMarketError("skew-symmetric matrix with a diagonal entry", lineno)
        off = rows != cols
        sign = -1.0 if symm == "skew-symmetric" else 1.0
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, sign * vals[off]]),
        )
    return _from_coo(n_rows, n_cols, rows, cols, vals)


def _entry_line(body, body_start, index):
    seen = -1
    for off, line in enumerate(body):
        if line.strip() and not line.lstrip().startswith("%"):
            seen += 1
            if seen == index:
                return body_start + off + 1
    return None


def _scan_entries(body, body_start, nnz):
    rows, cols, vals = [], [], []
    for off, line in enumerate(body):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        lineno = body_start + off + 1
        if len(rows) == nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        parts = s.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"expected 'row col value', got {len(parts)} fields", lineno)
        r = _parse_int(parts[0], lineno, "row index")
        c = _parse_int(parts[1], lineno, "column index")
        try:
            v = float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"value {parts[2]!r} is not a number", lineno) from None
        rows.append(r)
        cols.append(c)
        vals.append(v)
    if len(rows) != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {len(rows)}", body_start + len(body))
    return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals, dtype=np.float64)


def write_matrix_market(A, path, comment=None):
    """Write ``A`` as a general real coordinate file with round-trippable values."""
    path = Path(path)
    rows = np.repeat(np.arange(A.n_rows), np.diff(A.row_offsets))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for r, c, v in zip(rows + 1, A.col_indices + 1, A.values):
            fh.write(f"{r} {c} {float(v)!r}\n")


# -- generated problems ------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """Where a linear system comes from.

    ``matrix_source`` is a Matrix Market path or a generator name (see the
    module docstring). ``rhs_source`` is a path to a whitespace-separated
    vector (or a Matrix Market array/coordinate vector), ``"random-normal"``
    or ``"ones"``. ``precondition`` is ``"none"`` or ``"ilu0"``.
    """

    matrix_source: str
    rhs_source: str = "random-normal"
    seed: int = 0
    precondition: str = "none"

    def __post_init__(self):
        if self.precondition not in ("none", "ilu0"):
            raise ValueError(f"precondition must be 'none' or 'ilu0', not {self.precondition!r}")


_GEN = re.compile(r"^\s*([a-z0-9-]+)\s*(?:\((.*)\))?\s*$")
GENERATORS = ("randn-shifted", "diag", "convection-diffusion-2d")


def _parse_generator(name):
    m = _GEN.match(name)
    if not m or m.group(1) not in GENERATORS:
        return None
    args = [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
    return m.group(1), args


def is_generator(name):
    return _parse_generator(str(name)) is not None


def _rng(seed, stream):
    # independent streams for matrix and rhs from one seed
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, stream]))


def convection_diffusion_2d(grid, c=1.0):
    """``grid^2 x grid^2`` 5-point convection-diffusion matrix (scaled by ``h^2``)."""
    grid = int(grid)
    if grid < 1:
        raise ValueError("grid must be positive")
    h = 1.0 / (grid + 1)
    a = c * h / 2.0
    n = grid * grid
    iy, ix = np.divmod(np.arange(n), grid)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 4.0)]
    # (dy, dx, coefficient); central differences for c (u_x + u_y)
    for dy, dx, coef in ((0, -1, -1.0 - a), (0, 1, -1.0 + a), (-1, 0, -1.0 - a), (1, 0, -1.0 + a)):
        ny, nx = iy + dy, ix + dx
        ok = (ny >= 0) & (ny < grid) & (nx >= 0) & (nx < grid)
        rows.append(np.flatnonzero(ok))
        cols.append(ny[ok] * grid + nx[ok])
        vals.append(np.full(int(ok.sum()), coef))
    return _from_coo(n, n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def generate_matrix(name, n=None, seed=0):
    parsed = _parse_generator(str(name))
    if parsed is None:
        raise ValueError(f"unknown matrix generator {name!r}; known: {', '.join(GENERATORS)}")
    gen, args = parsed
    if gen == "convection-diffusion-2d":
        if not args:
            raise ValueError("convection-diffusion-2d needs a grid size")
        grid = int(args[0])
        c = float(args[1]) if len(args) > 1 else 1.0
        if n is not None and n != grid * grid:
            raise ValueError(f"convection-diffusion-2d({grid}) has n={grid * grid}, not {n}")
        return convection_diffusion_2d(grid, c)
    if n is None or n < 1:
        raise ValueError(f"generator {gen!r} needs a positive dimension n")
    if gen == "diag":
        return SparseMatrix(n, n, np.arange(n + 1), np.arange(n), np.arange(1, n + 1, dtype=float))
    shift = float(args[0]) if args else 30.0
    M = _rng(seed, 0).standard_normal((n, n))
    M[np.diag_indices(n)] += shift
    return SparseMatrix.from_dense(M, keep_zeros=True)


def _read_vector(path):
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        first = fh.readline()
    if first.lower().startswith("%%matrixmarket"):
        toks = first.split()
        if len(toks) >= 3 and toks[2].lower() == "array":
            lines = [l for l in path.read_text().splitlines()[1:] if l.strip() and not l.startswith("%")]
            return np.array([float(l) for l in lines[1:]])
        M = read_matrix_market(path)
        return M.toarray().ravel()
    return np.loadtxt(path, dtype=np.float64).ravel()


def generate_rhs(source, n, seed=0):
    if source == "random-normal":
        return _rng(seed, 1).standard_normal(n)
    if source == "ones":
        return np.ones(n)
    b = _read_vector(source)
    if b.shape != (n,):
        raise ValueError(f"right-hand side in {source!r} has {b.size} entries, expected {n}")
    return b


def generate_problem(spec, n=None):
    """Build ``(A, b)`` from a :class:`ProblemSpec`.

    ``n`` is needed by generators without an intrinsic size (``randn-shifted``,
    ``diag``) and ignored for files. Preconditioning is not applied here.
    """
    if is_generator(spec.matrix_source):
        A = generate_matrix(spec.matrix_source, n, spec.seed)
    else:
        A = read_matrix_market(spec.matrix_source)
    b = generate_rhs(spec.rhs_source, A.n_rows, spec.seed)
    return A, b


# -- convergence records -----------------------------------------------------

@dataclass
class ConvergenceRecord:
    """One outer iteration of a solve."""

    outer_index: int
    residual_norm: float
    bound_value: Optional[float]
    ffom_residual: Optional[float]
    inner_k: int
    inner_stop_reason: str
    cond_SAB: Optional[float]
    elapsed_seconds: float
    matvec_count: int


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(ConvergenceRecord))
_INT_FIELDS = {"outer_index", "inner_k", "matvec_count"}
_STR_FIELDS = {"inner_stop_reason"}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _fmt(v)
    return v


def write_records(records, path, format="csv"):
    """Write convergence records as csv (with header) or jsonl.

    ``None`` becomes an empty csv cell / JSON ``null``; floats keep 17
    significant digits. Non-finite floats are written as ``nan``/``inf``
    strings.
    """
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_FIELDS)
            for r in records:
                w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for r in records:
                obj = {}
                for f in RECORD_FIELDS:
                    obj[f] = _json_value(getattr(r, f))
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown record format {format!r}")


def _parse_field(name, raw):
    if raw is None or raw == "":
        return None
    if name in _STR_FIELDS:
        return str(raw)
    if name in _INT_FIELDS:
        return int(raw)
    return float(raw)


def read_records(path, format=None):
    """Read records written by :func:`write_records` (format inferred from the suffix)."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix == ".jsonl" else "csv"
    out = []
    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            rd = csv.reader(fh)
            header = next(rd, None)
            if header is None or tuple(header) != RECORD_FIELDS:
                raise ValueError(f"{path}: unexpected csv header {header}")
            for row in rd:
                out.append(ConvergenceRecord(*(_parse_field(f, v) for f, v in zip(RECORD_FIELDS, row))))
    elif format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    out.append(ConvergenceRecord(*(_parse_field(f, obj[f]) for f in RECORD_FIELDS)))
    else:
        raise ValueError(f"unknown record format {format!r}")
    return out
