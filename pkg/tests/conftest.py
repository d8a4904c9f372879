import re

import numpy as np
import pytest

import sketchkrylov.fgmres as fgmres_mod

ACCEPTANCE = {}
MONOTONE = {"runs": 0, "violations": []}


def _criterion(key):
    return int(re.match(r"\d+", key).group())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        grouped = {}
        for key in sorted(ACCEPTANCE):
            grouped.setdefault(_criterion(key), []).append(key)
        for num in range(1, 11):
            keys = grouped.get(num)
            if not keys:
                terminalreporter.write_line(f"[FAIL] criterion {num}: not run or errored before reporting")
                continue
            ok = all(ACCEPTANCE[k][0] for k in keys)
            parts = [ACCEPTANCE[k][1] if len(keys) == 1 else f"({k}) {ACCEPTANCE[k][1]}" for k in keys]
            if num == 3:
                ok = ok and not MONOTONE["violations"]
                parts.append(f"suite-wide {MONOTONE['runs']} outer steps, {len(MONOTONE['violations'])} violations")
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {'; '.join(parts)}")
    terminalreporter.write_line(
        f"FGMRES monotonicity monitor: {MONOTONE['runs']} outer steps checked, "
        f"{len(MONOTONE['violations'])} violations"
    )


@pytest.fixture
def acceptance():
    """Record ``(criterion, ok, detail)`` for the end-of-run summary."""

    def report(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok

    return report


@pytest.fixture(autouse=True)
def fgmres_monotonicity(monkeypatch):
    """Every outer step taken through ``solve`` must keep residuals non-increasing."""
    original = fgmres_mod.outer_step
    bad = []

    def checked(state, *args, **kwargs):
        out = original(state, *args, **kwargs)
        r = state.fgmres_residual_norms
        MONOTONE["runs"] += 1
        if len(r) > 1 and r[-1] > r[-2] + 1e-12 * state.beta:
            bad.append((len(r), r[-2], r[-1]))
        return out

    monkeypatch.setattr(fgmres_mod, "outer_step", checked)
    yield bad
    MONOTONE["violations"].extend(bad)
    assert not bad, f"FGMRES residual increased: {bad}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
