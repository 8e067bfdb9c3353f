import numpy as np
import pytest

from kernelgamma.dataset import Dataset


def make_dataset(rng, n_classes, sizes, dim, spread=1.0, offset=3.0):
    """Gaussian clouds, one per class, centers ``offset`` apart along axis 0."""
    X, y = [], []
    for c in range(n_classes):
        center = np.zeros(dim)
        center[0] = offset * c
        X.append(center + spread * rng.standard_normal((sizes[c], dim)))
        y.append(np.full(sizes[c], c))
    return Dataset(np.vstack(X), np.concatenate(y), tuple(range(n_classes)), "synthetic")


def two_blobs(seed=0, n=100, dim=2, separation=5.0, std=0.5):
    rng = np.random.default_rng(seed)
    return make_dataset(rng, 2, (n, n), dim, spread=std, offset=separation)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    item_marks = getattr(report, "criterion", None)
    if item_marks is None:
        return
    number, title = item_marks
    entry = _criteria.setdefault(number, {"title": title, "failed": [], "ran": 0})
    if report.when == "call" or report.outcome != "passed":
        entry["ran"] += report.when == "call"
        if report.outcome == "failed":
            entry["failed"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number}: {status}  {entry['title']}"
        if entry["failed"]:
            line += "  [failed: " + ", ".join(entry["failed"]) + "]"
        terminalreporter.write_line(line)
