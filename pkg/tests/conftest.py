import numpy as np
import pytest

from latbudget import _pykernels, kernels

BACKENDS = ["python"] + (["cython"] if kernels.compiled() is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel implementation."""
    impl = _pykernels if request.param == "python" else kernels.compiled()
    for name in ("em_fit", "batch_gradients", "sgd_epoch"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return impl


@pytest.fixture
def table3_counts():
    return np.array([[164, 2, 0, 0], [77, 76, 1, 0], [9, 154, 37, 0],
                     [0, 18, 125, 3], [0, 0, 81, 85], [0, 0, 6, 162]])


# acceptance reporting ------------------------------------------------------

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    if rep.failed:
        detail = detail or str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash")
                               else rep.longrepr).splitlines()[0]
    _CRITERIA[n] = [title, "PASS" if rep.passed else "FAIL", detail]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[n]
        line = f"criterion {n} [{status}] {title}"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))


@pytest.fixture
def report(request):
    """Attach a one-line measurement to the acceptance summary."""
    def note(text):
        request.node.criterion_detail = text
    return note
