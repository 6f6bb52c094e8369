"""Per-criterion pass/fail bookkeeping for the acceptance suite.

Tests tagged ``@pytest.mark.criterion(n, "title")`` feed a registry that is
printed as one line per criterion at the end of the session.  Criterion 10
also absorbs every test of criteria 1-9 that ran under the ``desc`` tie order.
"""

import pytest

_RESULTS = {}
_TITLES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def _record(n, ok, nodeid):
    passed, failed = _RESULTS.setdefault(n, ([], []))
    (passed if ok else failed).append(nodeid)


_key = pytest.StashKey[list]()


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if len(marker.args) > 1:
        _TITLES[n] = marker.args[1]
    entry = item.stash.setdefault(_key, [n, True])
    if call.excinfo is not None and call.excinfo.typename != "Skipped":
        entry[1] = False
    if call.when == "teardown":
        _record(n, entry[1], item.nodeid)
        if n != 10 and "desc" in item.nodeid:
            _record(10, entry[1], item.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_RESULTS):
        passed, failed = _RESULTS[n]
        status = "PASS" if not failed else "FAIL"
        title = _TITLES.get(n, "")
        tr.write_line(f"criterion {n:>2} {status}  {title}  ({len(passed)} passed, {len(failed)} failed)")
        for nodeid in failed:
            tr.write_line(f"    failed: {nodeid}")
