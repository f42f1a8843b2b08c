"""Shared test equipment: one-time kernel warmup and acceptance-line reporting."""

from __future__ import annotations

import numpy as np
import pytest

# (criterion number, passed, detail) tuples recorded by tests/test_acceptance.py.
_CRITERIA: list[tuple[int, bool, str]] = []


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile every jitted kernel before any timed test runs.

    The kernels are cached on disk, but a fresh checkout pays the compile cost
    once; charging it to a runtime-budgeted test would make timings meaningless.
    """
    from npfocus import _kernels
    from npfocus.detector import Thresholds, run_stream

    ys = np.linspace(0.0, 1.0, 24) % 0.7
    for mode in ("known", "unknown"):
        run_stream(ys, Thresholds(1e9, 1e9), num_quantiles=3, probation=5, mode=mode, collect_stats=True)
    bits = np.array([0, 1, 1, 0, 1], dtype=np.int64)
    stats = np.empty(bits.size)
    _kernels.bits_run_known(bits, 0.5, stats)
    _kernels.bits_run_unknown(bits, stats)
    _kernels.bits_run_known_counters(bits, 0.5)
    yield


@pytest.fixture
def criterion():
    """Record one acceptance-criterion outcome and enforce it."""

    def record(num: int, ok: bool, detail: str) -> None:
        _CRITERIA.append((num, ok, detail))
        assert ok, f"criterion {num:02d}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"CRITERION {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
