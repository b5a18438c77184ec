import functools

import numpy as np
import pytest

from pharmonic.grid import build_annulus_mesh, build_disk_mesh


@functools.lru_cache(maxsize=None)
def disk(level):
    return build_disk_mesh(level)


@functools.lru_cache(maxsize=None)
def annulus(level, inner=0.25, spacing="uniform"):
    return build_annulus_mesh(level, inner, spacing=spacing)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, printed at the end of the session
VERDICTS: dict = {}


def record_verdict(number: int, passed: bool, detail: str = "") -> None:
    VERDICTS[number] = (passed, detail)
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        passed, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
