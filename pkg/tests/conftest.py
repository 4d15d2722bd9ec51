import numpy as np
import pytest

from qbp.chimera import ChimeraGraph, construct_qgem_code
from qbp.ldpc import CodeSpec, ParityCheckMatrix, construct_regular_code


@pytest.fixture(scope="session")
def path_code():
    return ParityCheckMatrix.from_dense([[1, 1, 0], [0, 1, 1]])


@pytest.fixture(scope="session")
def code12():
    return construct_regular_code(CodeSpec(12, seed=3))


@pytest.fixture(scope="session")
def code96():
    return construct_regular_code(CodeSpec(96, seed=7))


@pytest.fixture(scope="session")
def native420():
    return construct_qgem_code(16, seed=0)


@pytest.fixture(scope="session")
def native30():
    return construct_qgem_code(8, region=(7, 4), n_level2=2, allow_dangling=True)


@pytest.fixture(scope="session")
def grid16():
    return ChimeraGraph(16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _ACCEPTANCE[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, status, detail = _ACCEPTANCE[n]
        line = f"criterion {n:2d} {status}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
