import pytest

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    item_info = _ITEMS.get(report.nodeid)
    if item_info is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = item_info
        _ACCEPTANCE[number] = (title, report.outcome, report.duration)


_ITEMS = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _ITEMS[item.nodeid] = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome, duration = _ACCEPTANCE[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}  ({duration:.2f} s)")


@pytest.fixture(scope="session")
def fixtures_dir():
    from pathlib import Path
    return Path(__file__).parent / "fixtures"
