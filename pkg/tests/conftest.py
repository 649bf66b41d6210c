import numpy as np
import pytest

from extremal_dm import _backend

_criteria: dict[int, dict] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            num, title = m.args
            _criteria.setdefault(num, {"title": title, "ok": True, "seen": False})
            item.user_properties.append(("criterion", num))


def pytest_runtest_logreport(report):
    for key, num in report.user_properties:
        if key != "criterion":
            continue
        entry = _criteria[num]
        if report.when == "call" or report.outcome != "passed":
            entry["seen"] = True
            if report.outcome != "passed":
                entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "PASS" if e["ok"] and e["seen"] else ("FAIL" if e["seen"] else "NOT RUN")
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {e['title']}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


BACKENDS = [pytest.param(_backend.python_kernels, id="python")]
if _backend.compiled_kernels is not None:
    BACKENDS.append(pytest.param(_backend.compiled_kernels, id="compiled"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    return request.param
