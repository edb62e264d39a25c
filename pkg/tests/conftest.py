import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

VERDICTS: dict[str, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def verdict(capsys):
    """Record and echo one pass/fail line for an acceptance criterion."""

    def emit(key: str, parts: list[tuple[str, float, float, bool]], seconds: float, limit: float):
        ok = all(p[3] for p in parts) and seconds <= limit
        detail = "; ".join(f"{name} {val:.3e} (tol {tol:.0e}){'' if good else ' FAILED'}"
                           for name, val, tol, good in parts)
        line = f"{key} {'PASS' if ok else 'FAIL'}: {detail}; {seconds:.1f}s of {limit:g}s"
        VERDICTS[key] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[key])
