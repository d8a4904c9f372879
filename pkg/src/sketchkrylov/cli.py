"""Command-line experiment runner.

``sketchkrylov run`` solves one system and writes one convergence record per
outer iteration; ``sketchkrylov sweep`` repeats a run for several values of
the Arnoldi truncation parameter ``t``. Exit status is 0 when the tolerance
was reached, 2 when it was not (records are still written) and 1 for
configuration errors.

The environment variable ``SKETCHKRYLOV_THREADS`` caps the number of BLAS
threads.
"""

import argparse
import contextlib
import logging
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .exceptions import MatrixMarketError, ZeroPivotError
from .fgmres import Mode, OuterConfig, solve
from .inner import GMRESInner, IdentityInner, SGMRESInner
from .io import ProblemSpec, generate_problem, write_records
from .precond import ilu0_factor, left_preconditioned_system
from .sgmres import InnerConfig
from .sketch import cw_new
from .sparse import CountingOperator

__all__ = ["RunConfig", "RunResult", "SOLVERS", "run", "sweep", "main"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2

SOLVERS = {
    "fgmres-sgmres": (Mode.FGMRES, "sgmres"),
    "ffom-sgmres": (Mode.FFOM, "sgmres"),
    "restarted-sgmres": (Mode.RESTART, "sgmres"),
    "fgmres-gmres": (Mode.FGMRES, "gmres"),
    "restarted-gmres": (Mode.RESTART, "gmres"),
    "gmres": (Mode.FGMRES, "identity"),
}


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run.

    ``s = "auto"`` resolves to ``2 * k_max`` (capped at ``n``). ``tol`` is an
    absolute residual target unless ``relative_tol`` is set, in which case it
    is scaled by ``||b||``. ``seed`` drives the problem generator and the sketch.
    """

    problem: ProblemSpec
    solver: str = "fgmres-sgmres"
    t: int = 2
    s: Union[int, str] = "auto"
    k_max: int = 500
    cond_threshold: float = 1e15
    tol: float = 1e-8
    relative_tol: bool = False
    m_max: int = 100
    n: Optional[int] = None
    output: Optional[str] = None
    format: str = "csv"

    @property
    def seed(self):
        return self.problem.seed

    def validate(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if self.t < 0:
            raise ConfigError("--t must be >= 0")
        if self.k_max < 1:
            raise ConfigError("--k-max must be >= 1")
        if not self.cond_threshold > 1:
            raise ConfigError("--cond-threshold must exceed 1")
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.m_max < 1:
            raise ConfigError("--m-max must be >= 1")
        if self.s != "auto" and (not isinstance(self.s, int) or self.s < 1):
            raise ConfigError("--s must be 'auto' or a positive integer")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError("--format must be csv or jsonl")


@dataclass
class RunResult:
    status: int
    records: list = field(default_factory=list)
    residual: float = float("nan")
    tol: float = float("nan")
    matvecs: int = 0
    seconds: float = 0.0
    x: Optional[np.ndarray] = None

    @property
    def converged(self):
        return self.status == EXIT_OK


@contextlib.contextmanager
def _thread_limit():
    limit = os.environ.get("SKETCHKRYLOV_THREADS")
    if not limit:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=int(limit)):
        yield


def _build_inner(cfg, op, n):
    mode, kind = SOLVERS[cfg.solver]
    if kind == "identity":
        return mode, IdentityInner()
    if kind == "gmres":
        return mode, GMRESInner(op, cfg.k_max)
    s = min(2 * cfg.k_max, n) if cfg.s == "auto" else int(cfg.s)
    if s > n:
        raise ConfigError(f"--s={s} exceeds the problem dimension n={n}")
    S = cw_new(s, n, cfg.seed)
    inner_cfg = InnerConfig(k_max=cfg.k_max, cond_threshold=cfg.cond_threshold)
    return mode, SGMRESInner(op, S, inner_cfg, t=cfg.t)


def run(cfg, quiet=False):
    """Solve the configured problem; returns a :class:`RunResult`.

    Records collected so far are written to ``cfg.output`` even when the
    solve raises.
    """
    cfg.validate()
    try:
        A, b = generate_problem(cfg.problem, cfg.n)
    except (OSError, MatrixMarketError, ValueError) as exc:
        raise ConfigError(f"cannot build problem: {exc}") from exc
    if cfg.problem.precondition == "ilu0":
        try:
            A, b = left_preconditioned_system(A, b, ilu0_factor(A))
        except ZeroPivotError as exc:
            raise ConfigError(str(exc)) from exc
    op = CountingOperator(A)
    n = op.shape[0]
    mode, inner = _build_inner(cfg, op, n)
    tol = cfg.tol * float(np.linalg.norm(b)) if cfg.relative_tol else cfg.tol
    outer = OuterConfig(m_max=cfg.m_max, tol=tol, mode=mode)
    if cfg.solver == "gmres":
        outer = replace(outer, m_max=min(cfg.m_max, n))

    records = []
    t0 = time.perf_counter()
    x = None
    try:
        with _thread_limit():
            x, _ = solve(op, b, cfg=outer, inner=inner, callback=records.append)
    finally:
        if cfg.output:
            write_records(records, cfg.output, cfg.format)
    seconds = time.perf_counter() - t0

    residual = records[-1].residual_norm if records else float(np.linalg.norm(b - op.matvec(x)))
    status = EXIT_OK if residual <= tol else EXIT_NOT_CONVERGED
    result = RunResult(status, records, residual, tol, op.n_matvecs, seconds, x)
    if not quiet:
        label = f"{cfg.solver} t={cfg.t}" if SOLVERS[cfg.solver][1] == "sgmres" else cfg.solver
        print(
            f"{label}: final residual {residual:.3e} (tol {tol:.3e}), "
            f"outer iterations {len(records)}, total matvecs {op.n_matvecs}, "
            f"wall time {seconds:.3f} s, {'converged' if result.converged else 'NOT converged'}"
        )
    return result


def _suffixed(path, t, repeat=0):
    p = Path(path)
    tag = f"_t{t}" if repeat == 0 else f"_t{t}_{repeat}"
    return str(p.with_name(f"{p.stem}{tag}{p.suffix}"))


def sweep(base, t_values, quiet=False):
    """Run ``base`` once per ``t``; outputs get a ``_t<t>`` suffix.

    A value repeated in ``t_values`` gets ``_t<t>_1``, ``_t<t>_2``, ... for
    its later occurrences.

    A failing run is reported and skipped. Returns ``{t_index: RunResult or None}``
    keyed by position in ``t_values``.
    """
    base.validate()
    results = {}
    seen = {}
    for i, t in enumerate(t_values):
        repeat = seen[t] = seen.get(t, -1) + 1
        out = _suffixed(base.output, t, repeat) if base.output else None
        cfg = replace(base, t=int(t), output=out)
        try:
            results[i] = run(cfg, quiet=quiet)
        except ConfigError:
            raise
        except Exception as exc:  # keep sweeping
            log.error("run with t=%s failed: %s", t, exc)
            results[i] = None
    return results


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--matrix", required=True, help="Matrix Market file or generator, e.g. 'randn-shifted(30)'")
    common.add_argument("--rhs", default="random-normal", help="'random-normal', 'ones' or a vector file")
    common.add_argument("--n", type=int, help="dimension for sizeless generators")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precondition", choices=("none", "ilu0"), default="none")
    common.add_argument("--solver", choices=tuple(SOLVERS), default="fgmres-sgmres")
    common.add_argument("--s", default="auto", help="sketch rows, or 'auto' for 2*k_max")
    common.add_argument("--k-max", type=int, default=500)
    common.add_argument("--cond-threshold", type=float, default=1e15)
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--relative-tol", action="store_true", help="scale --tol by ||b||")
    common.add_argument("--m-max", type=int, default=100)
    common.add_argument("--output", help="records file (csv or jsonl)")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sketchkrylov", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="solve one system")
    p_run.add_argument("--t", type=int, default=2, help="Arnoldi truncation parameter")
    p_sweep = sub.add_parser("sweep", parents=[common], help="run once per truncation parameter")
    p_sweep.add_argument("--t-values", type=int, nargs="*", default=[], metavar="T")
    return parser


def _config_from_args(args):
    s = args.s
    if s != "auto":
        try:
            s = int(s)
        except ValueError:
            raise ConfigError(f"--s must be 'auto' or an integer, not {s!r}") from None
    problem = ProblemSpec(args.matrix, args.rhs, args.seed, args.precondition)
    return RunConfig(
        problem=problem,
        solver=args.solver,
        t=getattr(args, "t", 2),
        s=s,
        k_max=args.k_max,
        cond_threshold=args.cond_threshold,
        tol=args.tol,
        relative_tol=args.relative_tol,
        m_max=args.m_max,
        n=args.n,
        output=args.output,
        format=args.format,
    )


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config_from_args(args)
        if args.command == "run":
            return run(cfg).status
        if not args.t_values:
            return EXIT_OK
        results = sweep(cfg, args.t_values)
        ok = all(r is not None and r.converged for r in results.values())
        return EXIT_OK if ok else EXIT_NOT_CONVERGED
    except (ConfigError, ValueError) as exc:
        print(f"sketchkrylov: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
