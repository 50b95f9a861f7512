"""Reference instances shared by the tests, the acceptance suite and the CLI.

All fixtures are deterministic.  The vanilla AV@R counterexample was found
once with :func:`search_vanilla_counterexample` and is stored verbatim in
:data:`VANILLA_COUNTEREXAMPLE`; a test re-runs the search and compares.
"""
from __future__ import annotations

import numpy as np

from ._rational import ONE, ZERO, Rat, to_rat
from .consistency import check_mptc_direct, check_supermartingale
from .duals import sample_dual_pairs
from .oracles import vanilla_recursion_gap
from .polycalc import Polyhedron
from .riskmeasures import SHP, AVaR, Entropic
from .scenario import NodeVector, ScenarioTree

__all__ = [
    "random_levels",
    "random_position",
    "avar_composed_fixture",
    "bid_ask_cone",
    "shp_bid_ask_fixture",
    "entropic_fixture",
    "search_vanilla_counterexample",
    "vanilla_counterexample",
    "VANILLA_COUNTEREXAMPLE",
]


def random_levels(tree, rng, lo=5, hi=8, den=10):
    """Per internal node and component, a level ``k/den`` with ``lo <= k <= hi``."""
    return {a: tuple(Rat(int(rng.integers(lo, hi + 1)), den) for _ in range(tree.d))
            for a in range(tree.n_nodes) if tree.children[a]}


def random_position(tree, rng, lo=-5, hi=5, t=None):
    t = tree.T if t is None else t
    return NodeVector.from_fn(
        tree, t, lambda _n: tuple(Rat(int(v)) for v in rng.integers(lo, hi + 1, size=tree.d)))


def avar_composed_fixture(seed=2024, n_positions=4):
    """Composed AV@R on a binary tree with ``T = 3``, ``d = 2`` and random levels.

    Branch probabilities are random rationals; levels lie in ``[1/2, 4/5]``.
    """
    rng = np.random.default_rng(seed)
    tree = ScenarioTree.random(rng, 3, 2, 2)
    model = AVaR(tree, random_levels(tree, rng))
    positions = [random_position(tree, rng) for _ in range(n_positions)]
    return tree, model, positions


def bid_ask_cone(ratio):
    """Solvency cone of a two-asset market with bid-ask ratio ``ratio >= 1``.

    Generated by the unit vectors and the exchanges ``(ratio, -1)`` and
    ``(-1, ratio)``.
    """
    k = to_rat(ratio)
    rays = [(ONE, ZERO), (ZERO, ONE), (k, -ONE), (-ONE, k)]
    return Polyhedron.from_vrep([(ZERO, ZERO)], rays, d=2)


def shp_bid_ask_fixture(ratios=None):
    """Two assets, two periods, binary tree; cone with a per-node bid-ask ratio.

    Default ratios are 2 at the root and 3/2, 5/2 at the two time-1 nodes and
    2 at the leaves.  Positions: a call-like claim and a swap.
    """
    tree = ScenarioTree.regular(2, 2, 2, probs={0: ["1/2", "1/2"], 1: ["1/3", "2/3"],
                                               2: ["3/4", "1/4"]})
    if ratios is None:
        ratios = {0: 2, 1: Rat(3, 2), 2: Rat(5, 2)}
    market = {n: bid_ask_cone(ratios.get(n, 2)) for n in range(tree.n_nodes)}
    model = SHP(tree, market)
    vals = {3: (2, -1), 4: (0, 1), 5: (-1, 2), 6: (1, 0)}
    X1 = NodeVector(tree, 2, vals)
    X2 = NodeVector(tree, 2, {3: (1, 0), 4: (0, 1), 5: (1, 0), 6: (0, 1)})
    return tree, model, [X1, X2]


def entropic_fixture(seed=7, T=3, max_children=3, d=2, rates=(0.5, 1.5)):
    rng = np.random.default_rng(seed)
    tree = ScenarioTree.random(rng, T, max_children, d)
    model = Entropic(tree, rates)
    positions = [random_position(tree, rng) for _ in range(3)]
    return tree, model, positions


# ---------------------------------------------------------------------------
# vanilla AV@R counterexample

#: Pinned output of ``search_vanilla_counterexample(seed=11)``.
VANILLA_COUNTEREXAMPLE = {
    "attempt": 0,
    "tree": {"d": 1, "m": 1, "nodes": [
        {"id": 0, "parent": None},
        {"id": 1, "parent": 0, "p": "2/3"},
        {"id": 2, "parent": 0, "p": "1/3"},
        {"id": 3, "parent": 1, "p": "3/7"},
        {"id": 4, "parent": 1, "p": "3/7"},
        {"id": 5, "parent": 1, "p": "1/7"},
        {"id": 6, "parent": 2, "p": "1/3"},
        {"id": 7, "parent": 2, "p": "2/3"},
    ]},
    "levels": {"0": ["1"], "1": ["3/4"], "2": ["1/4"]},
    "X": {"t": 2, "backend": "exact",
          "values": {"3": ["0"], "4": ["-3"], "5": ["2"], "6": ["3"], "7": ["3"]}},
    "battery_seed": 0,
    "negative_pairs": [0],
}


def _candidate(rng):
    d = int(rng.integers(1, 3))
    tree = ScenarioTree.random(rng, 2, 3, d)
    levels = random_levels(tree, rng, lo=1, hi=4, den=4)
    X = random_position(tree, rng, -3, 3)
    return tree, levels, X


def search_vanilla_counterexample(seed=11, max_tries=200, battery=100, battery_seed=0):
    """Randomized search over trees with ``T = 2``, at most 3 children, ``d <= 2``.

    A candidate qualifies when the brute-force recursion oracle flags ``X``,
    some sampled dual pair has a negative supermartingale gap, and the direct
    acceptance-set comparison reports a strict inclusion.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(max_tries):
        tree, levels, X = _candidate(rng)
        model = AVaR(tree, levels, composed=False)
        if all(g == 0 for g in vanilla_recursion_gap(model, X)):
            continue
        pairs = sample_dual_pairs(tree, 0, battery, battery_seed)
        gaps = [check_supermartingale(p, model, X, 0, 1).gap for p in pairs]
        neg = [k for k, g in enumerate(gaps) if g < 0]
        if not neg:
            continue
        rep = check_mptc_direct(model, X, 0, 1, spot_checks=False)
        if rep.verdict or not (rep.witness or {}).get("strict"):
            continue
        return {
            "attempt": attempt,
            "tree": tree.to_json(),
            "levels": {str(a): [str(x) for x in lv] for a, lv in sorted(levels.items())},
            "X": X.to_json(),
            "battery_seed": battery_seed,
            "negative_pairs": neg,
        }
    return None


def vanilla_counterexample():
    """``(tree, vanilla model, composed model, X, battery_seed)`` from the pinned data."""
    data = VANILLA_COUNTEREXAMPLE
    tree = ScenarioTree.from_json(data["tree"])
    levels = {int(a): tuple(to_rat(x) for x in lv) for a, lv in data["levels"].items()}
    X = NodeVector.from_json(tree, data["X"])
    return (tree, AVaR(tree, levels, composed=False), AVaR(tree, levels), X,
            data["battery_seed"])
