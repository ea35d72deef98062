import numpy as np
import pytest

from skruin import GridSpec, LinkPair, SchemeSpec, build_net_usage, solve_survival


@pytest.fixture(scope="session")
def link():
    return LinkPair.from_db(20.0, 10.0)


@pytest.fixture(scope="session")
def det_dist(link):
    return build_net_usage(link, SchemeSpec.deterministic())


@pytest.fixture(scope="session")
def rand_dists(link):
    return {p: build_net_usage(link, SchemeSpec.random_tx(p)) for p in (0.1, 0.35)}


@pytest.fixture(scope="session")
def det_surface(det_dist):
    return solve_survival(det_dist, GridSpec(0.0, 60.0, 0.01, 30))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting ---------------------------------------------------------

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when == "teardown" or (rep.when == "setup" and rep.passed):
        return
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed:
        crash = getattr(rep.longrepr, "reprcrash", None)
        reason = (crash.message if crash else str(rep.longrepr)).splitlines()[0]
        detail = f"{detail} [{reason}]" if detail else reason
    status = "PASS" if rep.passed else "FAIL"
    _CRITERIA.append(f"{status}  criterion {mark.args[0]}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
