import numpy as np
import pytest

from riskset._rational import INF, NEG_INF, ZERO, Rat
from riskset.duals import DualPair, OrthComplement, sample_dual_pairs
from riskset.fixtures import (avar_composed_fixture, entropic_fixture, random_levels,
                              random_position, shp_bid_ask_fixture)
from riskset.riskmeasures import AVaR
from riskset.scalarize import (check_proper, check_stepped_duality, rho, rho_cond,
                               rho_dual_value)
from riskset.scenario import NodeVector, ScenarioTree


@pytest.fixture(scope="module")
def avar():
    return avar_composed_fixture()


@pytest.fixture(scope="module")
def shp():
    return shp_bid_ask_fixture()


def test_box_corner_and_negative_direction():
    tree = ScenarioTree.regular(1, 2, 1)
    model = AVaR(tree, {0: (Rat(1),)})
    X = NodeVector(tree, 1, {1: (Rat(2),), 2: (Rat(-4),)})
    # lambda = 1 is the expectation: corner -E[X] = 1
    assert rho(model, X, (3,)).primal == 3
    assert rho(model, X, (-1,), with_dual=False).primal == NEG_INF
    assert not check_proper(model, (-1,), 0)


def test_empty_risk_gives_plus_infinity():
    tree = ScenarioTree.regular(1, 2, 2, m=1)
    model = AVaR(tree, {0: (Rat(1, 2), Rat(1, 2))})
    X = NodeVector(tree, 1, {1: (Rat(1), Rat(-1)), 2: (Rat(1), Rat(1))})
    assert rho(model, X, (1, 0)).primal == INF


def test_strong_duality_exact(avar, shp):
    rng = np.random.default_rng(5)
    for tree, model, _ in (avar, shp):
        for _ in range(10):
            X = random_position(tree, rng)
            w = tuple(Rat(int(x)) for x in rng.integers(1, 4, size=tree.d))
            res = rho(model, X, w)
            if res.primal in (INF, NEG_INF):
                continue
            assert res.gap == 0 and res.dual == res.primal
            # optimal points attain the node values
            for n, u in res.u.items():
                assert sum(a * b for a, b in zip(w, u)) == res.node_values[n]


def test_weak_duality_sampled_pairs(avar):
    tree, model, positions = avar
    X = positions[0]
    for p in sample_dual_pairs(tree, 0, 100, 4, radius=Rat(1, 2)):
        primal = rho(model, X, p.w, with_dual=False).primal
        assert rho_dual_value(model, X, p.w, p) <= primal


def test_entropic_duality_within_tolerance():
    tree, model, positions = entropic_fixture()
    res = rho(model, positions[0], (1, 2))
    assert abs(res.gap) < 1e-9
    P = sample_dual_pairs(tree, 0, 1, 0)[0]
    w = NodeVector.constant(tree, 0, (1, 1))
    P = DualPair(P.Q, w, 0)
    assert rho_dual_value(model, positions[0], w, P) <= rho(model, positions[0], (1, 1)).primal + 1e-12


def test_m_perp_validation(avar):
    tree, model, positions = avar
    p = sample_dual_pairs(tree, 0, 2, 0)[1]
    # with every asset eligible the complement must vanish
    with pytest.raises(ValueError):
        rho_dual_value(model, positions[0], p.w, p,
                       OrthComplement(NodeVector.constant(tree, 0, (1, 0))))
    with pytest.raises(ValueError):
        rho_dual_value(model, positions[0], NodeVector.constant(tree, 0, (7, 7)), p)


def test_m_perp_partial_eligibility():
    rng = np.random.default_rng(3)
    tree = ScenarioTree.random(rng, 2, 2, 2, m=1)
    model = AVaR(tree, random_levels(tree, rng))
    X = NodeVector.from_fn(tree, 2, lambda n: (Rat(int(rng.integers(-3, 4))), ZERO))
    res = rho(model, X, (1, 0))
    assert res.gap == 0
    assert all(v[0] == 0 for v in res.m_perp.m_perp.values())


def test_rho_cond_aggregates(avar):
    tree, model, positions = avar
    for t in range(tree.T + 1):
        w = NodeVector.constant(tree, t, (2, 1))
        vals = rho_cond(model, positions[2], w, t)
        total = sum((tree.prob[n] * v for n, v in vals.items()), ZERO)
        assert total == rho(model, positions[2], w, t, with_dual=False).primal


def test_translativity_under_scalarization(avar):
    tree, model, positions = avar
    rng = np.random.default_rng(8)
    for t in range(tree.T):
        shift = NodeVector.from_fn(tree, t, lambda n: tuple(Rat(int(x)) for x in rng.integers(-3, 4, size=2)))
        w = (Rat(1), Rat(2))
        X = positions[1]
        a = rho(model, X + shift.lift(tree.T), w, t, with_dual=False).primal
        b = rho(model, X, w, t, with_dual=False).primal
        mean = sum((tree.prob[n] * (w[0] * shift[n][0] + w[1] * shift[n][1])
                    for n in tree.nodes_at(t)), ZERO)
        assert a == b - mean


def test_check_proper_shp(shp):
    tree, model, positions = shp
    assert check_proper(model, (1, 1), 0)
    assert not check_proper(model, (1, -1), 0)
    assert not check_proper(model, (1, 3), 0)
    for w in ((1, 1), (1, -1), (1, 3), (2, 3)):
        finite = rho(model, positions[0], w, with_dual=False).primal not in (INF, NEG_INF)
        assert finite == check_proper(model, w, 0)


def test_check_proper_matches_finiteness(avar):
    tree, model, positions = avar
    rng = np.random.default_rng(1)
    for _ in range(20):
        w = tuple(Rat(int(x)) for x in rng.integers(-2, 3, size=2))
        if not any(w):
            continue
        finite = rho(model, positions[0], w, with_dual=False).primal != NEG_INF
        assert finite == check_proper(model, w, 0)


def test_stepped_duality(avar):
    tree, model, _ = avar
    rng = np.random.default_rng(2)
    pairs = sample_dual_pairs(tree, 0, 20, 1, radius=Rat(1, 2))
    for s in (1, 2):
        X = random_position(tree, rng, t=s)
        res = check_stepped_duality(model, X, (1, 1), 0, s, pairs)
        assert res.gap == 0
        assert res.details["inclusion_ok"]


def test_stepped_duality_s_equals_t(avar):
    tree, model, _ = avar
    X = random_position(tree, np.random.default_rng(0), t=1)
    res = check_stepped_duality(model, X, (1, 1), 1, 1)
    assert res.primal == rho(model, X.lift(tree.T), (1, 1), 1, with_dual=False).primal


def test_stepped_duality_rejects_entropic():
    tree, model, positions = entropic_fixture()
    X = random_position(tree, np.random.default_rng(0), t=1)
    with pytest.raises(TypeError):
        check_stepped_duality(model, X, (1, 1), 0, 1)
