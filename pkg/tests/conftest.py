import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from specwalk.graph import Graph

settings.register_profile(
    "default", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def from_nx(G) -> Graph:
    G = nx.convert_node_labels_to_integers(G)
    return Graph.from_edges(G.number_of_nodes(), list(G.edges()))


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def k4():
    return from_nx(nx.complete_graph(4))


@pytest.fixture
def chorded_cycle():
    # 4-cycle 0-1-2-3-0 plus the chord 0-2
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])


@pytest.fixture(scope="session")
def karate():
    return from_nx(nx.karate_club_graph())


@pytest.fixture(scope="session")
def plc():
    return from_nx(nx.powerlaw_cluster_graph(120, 3, 0.5, seed=3))


def random_graph(n, p, seed):
    return from_nx(nx.gnp_random_graph(n, p, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, aggregated over its tests
_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = mark.args
    ok, reasons, _ = _criteria.get(number, (True, [], title))
    if rep.failed or rep.skipped:
        crash = getattr(rep.longrepr, "reprcrash", None)
        msg = crash.message if crash is not None else str(rep.longrepr)
        ident = item.callspec.id if hasattr(item, "callspec") else item.name
        reasons = reasons + [f"{ident}: {msg.splitlines()[0] if msg else 'failed'}"]
        ok = False
    _criteria[number] = (ok, reasons, title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, reasons, title = _criteria[number]
        line = f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}"
        if reasons:
            line += " | " + "; ".join(reasons)
        terminalreporter.write_line(line)
