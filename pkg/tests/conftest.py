import pytest
from hypothesis import settings

settings.register_profile("repo", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repo")

_AC_RESULTS: dict[str, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "ac(id): test backs the named acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("ac")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _AC_RESULTS.setdefault(mark.args[0], []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for ac in sorted(_AC_RESULTS, key=lambda k: int(k[2:])):
        runs = _AC_RESULTS[ac]
        ok = all(o == "passed" for _, o in runs)
        failed = [name for name, o in runs if o != "passed"]
        line = f"{ac}: {'PASS' if ok else 'FAIL'} ({len(runs)} test{'s' if len(runs) != 1 else ''})"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)
