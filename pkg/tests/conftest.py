import numpy as np
import pytest

from hetesim.graph import RelationDef, Schema, build_graph
from hetesim.synthetic import toy_graph


@pytest.fixture
def toy():
    return toy_graph()


@pytest.fixture
def biblio_schema():
    """Authors, papers, venues, conferences and subjects."""
    return Schema(
        ["A", "P", "V", "C", "S"],
        [
            RelationDef("AP", "A", "P"),
            RelationDef("PV", "P", "V"),
            RelationDef("VC", "V", "C"),
            RelationDef("PS", "P", "S"),
        ],
    )


@pytest.fixture
def biblio(biblio_schema):
    rng = np.random.default_rng(7)
    nodes = (
        [(f"a{i}", "A") for i in range(6)]
        + [(f"p{i}", "P") for i in range(10)]
        + [(f"v{i}", "V") for i in range(4)]
        + [(f"c{i}", "C") for i in range(2)]
        + [(f"s{i}", "S") for i in range(3)]
    )
    edges = []
    for p in range(10):
        for a in rng.choice(6, size=rng.integers(1, 4), replace=False):
            edges.append((f"a{a}", f"p{p}", "AP"))
        edges.append((f"p{p}", f"v{rng.integers(4)}", "PV"))
        edges.append((f"p{p}", f"s{rng.integers(3)}", "PS"))
    edges += [("v0", "c0", "VC"), ("v1", "c0", "VC"), ("v2", "c1", "VC"), ("v3", "c1", "VC")]
    # a dangling author
    nodes.append(("a_idle", "A"))
    return build_graph(biblio_schema, nodes, edges)


# -- acceptance report ------------------------------------------------------
# Tests marked ``acceptance(number, title)`` get one PASS/FAIL line each in
# the terminal summary, whatever the capture mode.

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key = tuple(marker.args)
    if report.when == "call" or report.outcome != "passed":
        # a failure in any phase wins over an earlier pass
        if _ACCEPTANCE.get(key) != "failed":
            _ACCEPTANCE[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome in sorted(_ACCEPTANCE.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {title}")
