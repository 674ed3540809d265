import os

import pytest

from thetarho import riemann

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("goepel-cache")
    old = os.environ.get("THETARHO_CACHE")
    os.environ["THETARHO_CACHE"] = str(path)
    yield path
    if old is None:
        os.environ.pop("THETARHO_CACHE", None)
    else:
        os.environ["THETARHO_CACHE"] = old


@pytest.fixture(scope="session")
def period_data():
    cache = {}

    def get(g):
        if g not in cache:
            curve = riemann.default_curve(g)
            cache[g] = (curve, riemann.periods(curve))
        return cache[g]

    return get


@pytest.fixture
def criterion(request):
    """Register the acceptance criterion a test covers; its outcome is printed at session end."""
    mine = []

    def record(number: int, title: str, detail: str = ""):
        mine.append((number, title, detail))

    yield record
    rep = getattr(request.node, "rep_call", None)
    for number, title, detail in mine:
        ok = rep is not None and rep.passed
        if number in ACCEPTANCE:
            ok = ok and ACCEPTANCE[number][1]
        ACCEPTANCE[number] = (title, ok, detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail and ok else ""))
