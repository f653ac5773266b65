import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from contentsampling.graph import Graph  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data"

# criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def path4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def star():
    return Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])


def random_connected_graph(n, p, seed):
    """Erdos-Renyi draw, redrawn until connected and non-bipartite."""
    rng = np.random.default_rng(seed)
    while True:
        e = np.argwhere(np.triu(rng.random((n, n)) < p, 1))
        g = Graph.from_edges(n, e)
        cm = g.components
        if cm.component_sizes[cm.lcc_id] == n and _has_odd_cycle(g):
            return g


def _has_odd_cycle(g):
    color = {0: 0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in g.neighbors(u).tolist():
            if w not in color:
                color[w] = 1 - color[u]
                stack.append(w)
            elif color[w] == color[u]:
                return True
    return False
