import sys

import numpy as np
import pytest

from riskset._rational import Rat
from riskset.scenario import ScenarioTree, VectorMeasure


def random_measure(rng, tree, zeros=False):
    """Random vector measure; with ``zeros`` some transitions vanish."""
    q = []
    for _ in range(tree.d):
        row = {}
        for a in range(tree.n_nodes):
            ch = tree.children[a]
            if not ch:
                continue
            lo = 0 if zeros else 1
            raw = [int(x) for x in rng.integers(lo, 5, size=len(ch))]
            if not any(raw):
                raw[0] = 1
            tot = sum(raw)
            row.update({c: Rat(x, tot) for c, x in zip(ch, raw)})
        q.append(row)
    return VectorMeasure(tree, q)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_child():
    """Root with two children, p = (1/2, 1/2), d = 1."""
    return ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
