import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def haar_union_16():
    from framemcmc.frames import WaveletSpec, build_union_frame
    return build_union_frame([WaveletSpec("haar", 1), WaveletSpec("haar", 1, shift=1)], (16, 16))


@pytest.fixture(scope="session")
def tiny_union():
    """L = 4, K = 8: Haar plus shifted Haar on length-4 signals."""
    from framemcmc.frames import WaveletSpec, build_union_frame
    return build_union_frame([WaveletSpec("haar", 1), WaveletSpec("haar", 1, shift=1)], (4,))


# --- acceptance summary -----------------------------------------------------
# tests/test_acceptance.py records one line per criterion through the
# `criterion` fixture; they are printed together at the end of the run.

_CRITERIA: dict = {}


@pytest.fixture
def criterion(request):
    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
