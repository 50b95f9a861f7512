import math

import numpy as np
import pytest

from riskset import _kernels
from riskset._rational import ONE, ZERO, Rat
from riskset.fixtures import (avar_composed_fixture, bid_ask_cone, random_levels,
                              random_position, shp_bid_ask_fixture)
from riskset.oracles import avar_dual_lp, shp_matches_stacked
from riskset.polycalc import HalfspaceSet, Polyhedron, contains, minkowski_sum, support_value
from riskset.riskmeasures import (SHP, AVaR, CustomOneStep, Entropic, acceptance_set,
                                  avar_loss, avar_scalar_cond, compose, risk_entropic,
                                  risk_from_acceptance, stepped_acceptance)
from riskset.scenario import NodeVector, ScenarioTree, VectorMeasure, cond_expect


def _x(tree, vals):
    return NodeVector(tree, tree.T, vals)


# ------------------------------------------------------------------ AV@R


def test_avar_loss_examples():
    half = Rat(1, 2)
    assert avar_loss([(half, ZERO), (half, ONE)], half) == 1
    assert avar_loss([(half, Rat(4)), (half, Rat(2))], ONE) == 3
    assert avar_loss([(ONE, Rat(-7))], Rat(1, 3)) == -7


def test_avar_matches_dual_lp():
    rng = np.random.default_rng(8)
    for _ in range(200):
        k = int(rng.integers(1, 6))
        raw = [int(v) for v in rng.integers(1, 6, size=k)]
        probs = [Rat(v, sum(raw)) for v in raw]
        losses = [Rat(int(v)) for v in rng.integers(-6, 7, size=k)]
        lam = Rat(int(rng.integers(1, 11)), 10)
        assert avar_loss(list(zip(probs, losses)), lam) == avar_dual_lp(probs, losses, lam)


def test_avar_scalar_cond():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 1)
    assert avar_scalar_cond(tree, {1: ZERO, 2: -ONE}, Rat(1, 2), 0)[0] == 1


def test_avar_level_one_is_conditional_expectation():
    rng = np.random.default_rng(1)
    tree = ScenarioTree.random(rng, 3, 3, 2)
    model = AVaR(tree, ONE)
    X = random_position(tree, rng)
    P = VectorMeasure.reference(tree)
    for t in range(tree.T + 1):
        E = cond_expect(P, -X, t)
        assert model.corners(X, t) == {n: E[n] for n in tree.nodes_at(t)}


def test_avar_single_path_and_one_period():
    path = ScenarioTree([None, 0, 1], [1, 1, 1], 2)
    X = _x(path, {2: (3, -1)})
    m = AVaR(path, Rat(1, 3))
    assert all(m.corners(X, t) == {path.nodes_at(t)[0]: (-3, 1)} for t in range(3))
    one = ScenarioTree([None, 0, 0, 0], [1, "1/4", "1/4", "1/2"], 1)
    X = _x(one, {1: (1,), 2: (-2,), 3: (0,)})
    lam = Rat(1, 2)
    assert AVaR(one, lam).corners(X, 0)[0] == \
        (avar_loss([(Rat(1, 4), -ONE), (Rat(1, 4), Rat(2)), (Rat(1, 2), ZERO)], lam),)
    assert AVaR(one, lam, composed=False).corners(X, 0) == AVaR(one, lam).corners(X, 0)


def test_avar_box_matches_acceptance_route():
    rng = np.random.default_rng(40)
    tree = ScenarioTree.random(rng, 2, 3, 2)
    model = AVaR(tree, random_levels(tree, rng))
    vanilla = AVaR(tree, model.levels, composed=False)
    for X in [random_position(tree, rng) for _ in range(2)]:
        for mdl in (model, vanilla):
            for t in range(tree.T + 1):
                box = mdl.risk(X, t)
                for n in tree.nodes_at(t):
                    assert risk_from_acceptance(mdl.acceptance(n), X, n) == box[n]


def test_avar_partial_eligibility_uses_polyhedral_route():
    rng = np.random.default_rng(4)
    tree = ScenarioTree.random(rng, 2, 2, 2, m=1)
    model = AVaR(tree, random_levels(tree, rng))
    # the second asset cannot be offset, so keep it nonnegative
    X = NodeVector.from_fn(tree, 2, lambda n: (Rat(int(rng.integers(-5, 6))),
                                               Rat(int(rng.integers(0, 4)))))
    sp = compose(model, X)
    assert sp.kind == "poly"
    full = ScenarioTree.from_json({**tree.to_json(), "m": 2})
    box = AVaR(full, model.levels).corners(NodeVector(full, 2, dict(X.items())), 0)[0]
    R0 = sp[0][0]
    assert R0 == Polyhedron.orthant(2, mask=1, corner=(box[0], 0))


def test_non_eligible_loss_gives_empty_set_with_provenance():
    tree = ScenarioTree.regular(2, 2, 2, m=1)
    model = AVaR(tree, Rat(1, 2))
    X = NodeVector.from_fn(tree, 2, lambda n: (ONE, -ONE if n == 4 else ONE))
    sp = compose(model, X)
    assert sp[2][4].is_empty()
    assert sp[0][0].is_empty() and "node" in sp[0][0].note
    assert sp.to_json()["times"]["0"]["0"]["empty"] is True


def test_vanilla_compose_rejected():
    tree, model, positions = avar_composed_fixture()
    with pytest.raises(ValueError):
        compose(AVaR(tree, model.levels, composed=False), positions[0])


def test_avar_acceptance_level_one_is_mean():
    tree = ScenarioTree([None, 0, 0], [1, "1/3", "2/3"], 1)
    A = acceptance_set(AVaR(tree, ONE), 0)[0]
    assert A == HalfspaceSet((Rat(1, 3), Rat(2, 3)), 0).to_polyhedron()


# --------------------------------------------------------------- generic laws


def _models(seed, T=3):
    rng = np.random.default_rng(seed)
    tree = ScenarioTree.random(rng, T, 2, 2)
    avar = AVaR(tree, random_levels(tree, rng))
    positions = [random_position(tree, rng) for _ in range(3)]
    steps = {}
    for n in range(tree.n_nodes):
        if tree.children[n]:
            k = len(tree.children[n])
            # a one-step set: every child pays at most 1 and the mean is >= 0
            rows = [(tuple(ONE if j == i else ZERO for j in range(2 * k)), -ONE)
                    for i in range(2 * k)]
            for i in range(2):
                row = [ZERO] * (2 * k)
                for j, c in enumerate(tree.children[n]):
                    row[2 * j + i] = tree.p[c]
                rows.append((tuple(row), ZERO))
            steps[n] = Polyhedron.from_hrep(rows, 2 * k)
    custom = CustomOneStep(tree, steps)
    return rng, tree, [avar, custom], positions


def test_translativity_and_monotonicity():
    rng, tree, models, positions = _models(31)
    for model in models:
        for X in positions:
            for t in range(tree.T + 1):
                m_t = NodeVector.from_fn(tree, t, lambda n: tuple(
                    Rat(int(v)) for v in rng.integers(-3, 4, size=2)))
                shifted = compose(model, X + m_t.lift(tree.T))
                base = compose(model, X)
                for n in tree.nodes_at(t):
                    lhs = shifted.poly(t, n)
                    rhs = Polyhedron.from_vrep(
                        [tuple(a - b for a, b in zip(v, m_t[n])) for v in base.poly(t, n).vertices],
                        base.poly(t, n).rays, base.poly(t, n).lines, d=2)
                    assert lhs == rhs
                Y = X + NodeVector.from_fn(tree, tree.T, lambda n: tuple(
                    Rat(int(v)) for v in rng.integers(0, 3, size=2)))
                bigger = compose(model, Y)
                for n in tree.nodes_at(t):
                    assert contains(bigger.poly(t, n), base.poly(t, n))[0]


def test_normalization():
    _, tree, models, positions = _models(32)
    zero = NodeVector.constant(tree, tree.T, (0, 0))
    for model in models:
        R0 = compose(model, zero)
        for X in positions:
            R = compose(model, X)
            for t in range(tree.T + 1):
                for n in tree.nodes_at(t):
                    assert minkowski_sum(R.poly(t, n), R0.poly(t, n)) == R.poly(t, n)


def test_custom_compose_matches_acceptance():
    _, tree, models, positions = _models(33, T=2)
    custom = models[1]
    for X in positions:
        sp = compose(custom, X)
        for t in range(tree.T + 1):
            for n in tree.nodes_at(t):
                assert risk_from_acceptance(custom.acceptance(n), X, n) == sp[t][n]


def test_conditional_convexity_mixing():
    rng, tree, models, positions = _models(34)
    X, Y = positions[0], positions[1]
    for model in models:
        RX, RY = compose(model, X), compose(model, Y)
        lam = {n: Rat(int(rng.integers(0, 5)), 4) for n in tree.nodes_at(1)}
        lam_T = NodeVector.from_fn(tree, tree.T, lambda l: (lam[tree.anc(l, 1)],) * 2)
        mix = NodeVector.from_fn(tree, tree.T, lambda l: tuple(
            a * x + (1 - a) * y for a, x, y in zip(lam_T[l], X[l], Y[l])))
        RM = compose(model, mix)
        for n in tree.nodes_at(1):
            a = lam[n]
            for u in RX.poly(1, n).vertices:
                for v in RY.poly(1, n).vertices:
                    pt = tuple(a * x + (1 - a) * y for x, y in zip(u, v))
                    assert contains(RM.poly(1, n), Polyhedron.point(pt))[0]


def test_risk_from_orthant():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    X = _x(tree, {1: (1, -2), 2: (-3, 0)})
    A = Polyhedron.orthant(4)
    assert risk_from_acceptance(A, X, 0) == Polyhedron.orthant(2, corner=(3, 2))


def test_risk_from_acceptance_membership_lp():
    rng = np.random.default_rng(6)
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    for _ in range(40):
        rows = [(tuple(Rat(int(v)) for v in rng.integers(0, 3, size=4)),
                 Rat(int(rng.integers(-2, 3)))) for _ in range(3)]
        A = Polyhedron.from_hrep(rows, 4)
        X = _x(tree, {1: tuple(Rat(int(v)) for v in rng.integers(-2, 3, size=2)),
                      2: tuple(Rat(int(v)) for v in rng.integers(-2, 3, size=2))})
        R = risk_from_acceptance(A, X, 0)
        for _ in range(10):
            u = tuple(Rat(int(v)) for v in rng.integers(-4, 5, size=2))
            stacked = (X[1][0] + u[0], X[1][1] + u[1], X[2][0] + u[0], X[2][1] + u[1])
            direct = all(sum(a * x for a, x in zip(row, stacked)) >= b for row, b in rows)
            assert contains(R, Polyhedron.point(u))[0] == direct


def test_stepped_acceptance_is_measurable_slice():
    tree, model, _ = avar_composed_fixture()
    A01 = stepped_acceptance(model, 0, 1)[0]
    assert A01.d == 2 * len(tree.nodes_at(1))
    # a time-1 position is accepted stepwise iff its lift is accepted
    for v in [(1, 1, 1, 1), (2, -1, -1, 2), (-1, 0, 0, 0)]:
        vec = tuple(Rat(x) for x in v)
        X = NodeVector(tree, 1, {c: vec[2 * k:2 * k + 2] for k, c in enumerate(tree.nodes_at(1))})
        lifted = risk_from_acceptance(model.acceptance(0), X.lift(tree.T), 0)
        stepped = risk_from_acceptance(A01, X, 0)
        assert lifted == stepped


# ------------------------------------------------------------------ entropic


def test_entropic_log_cosh():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 1)
    X = _x(tree, {1: (1,), 2: (-1,)})
    r = Entropic(tree, 1.0).corners(X, 0)[0][0]
    assert abs(r - math.log(math.cosh(1.0))) <= 1e-12
    zero = NodeVector.constant(tree, 1, (0,))
    assert Entropic(tree, 2.0).corners(zero, 0)[0] == (0.0,)


def test_entropic_compose_matches_direct():
    rng = np.random.default_rng(21)
    for _ in range(10):
        tree = ScenarioTree.random(rng, 3, 3, 2)
        X = random_position(tree, rng, -10, 10)
        model = Entropic(tree, (float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 3))))
        for t in range(tree.T + 1):
            comp, direct = model.corners(X, t), risk_entropic(X, model.rates, t)
            for n in tree.nodes_at(t):
                assert np.allclose(comp[n], direct[n], rtol=0, atol=1e-12)


def test_entropic_large_values_do_not_overflow():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 1)
    X = _x(tree, {1: (-1000,), 2: (1000,)})
    r = Entropic(tree, 5.0).corners(X, 0)[0][0]
    assert math.isfinite(r) and abs(r - (1000 - math.log(2) / 5)) < 1e-9


def test_entropic_rejects_bad_config():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    with pytest.raises(ValueError):
        Entropic(tree, (1.0, -1.0))
    with pytest.raises(TypeError):
        Entropic(tree, 1.0).risk(NodeVector.constant(tree, 1, (0, 0)), 0)


def test_kernel_backends_agree():
    rng = np.random.default_rng(0)
    vals = rng.normal(size=(50, 3))
    group = rng.integers(0, 7, size=50)
    group[:7] = np.arange(7)
    logp = np.log(rng.uniform(0.1, 1, size=50))
    lam = np.array([0.5, 1.0, 2.0])
    a = _kernels.grouped_lse_numpy(vals, group, logp, lam, 7)
    b = _kernels._grouped_lse_loop(vals, group, logp, lam, 7)
    assert np.allclose(a, b, rtol=0, atol=1e-12)
    assert np.allclose(_kernels.grouped_lse(vals, group, logp, lam, 7), a, atol=1e-12)


# ---------------------------------------------------------------------- SHP


def test_shp_no_trading_is_max():
    rng = np.random.default_rng(2)
    tree = ScenarioTree.random(rng, 2, 3, 2)
    model = SHP(tree, Polyhedron.orthant(2))
    X = random_position(tree, rng)
    # R_t(X) = SHP_t(-X): cover the worst -X over the subtree
    for n in tree.nodes_at(0):
        corner = tuple(max(-X[l][i] for l in tree.leaves_under(n)) for i in range(2))
        assert model.risk(X, 0)[n] == Polyhedron.orthant(2, corner=corner)


def test_shp_one_period_bid_ask():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    model = SHP(tree, bid_ask_cone(2))
    Y = _x(tree, {1: (1, 0), 2: (0, 1)})
    S = model.shp_process(Y)[0][0]
    K = bid_ask_cone(2)
    inter = Polyhedron.from_hrep(
        minkowski_sum(Polyhedron.point((1, 0)), K).ineqs
        + minkowski_sum(Polyhedron.point((0, 1)), K).ineqs, 2)
    assert S == minkowski_sum(inter, K)
    assert shp_matches_stacked(model, Y, 0, S)[0]


def test_shp_zero_position():
    tree, model, _ = shp_bid_ask_fixture()
    zero = NodeVector.constant(tree, tree.T, (0, 0))
    R0 = model.risk(zero, 0)[0]
    assert contains(R0, model.market[0])[0]
    assert contains(R0, Polyhedron.point((0, 0)))[0]


def test_shp_fixture_matches_stacked_oracle():
    tree, model, positions = shp_bid_ask_fixture()
    for X in positions:
        Y = -X
        shp = model.shp_process(Y)
        for t in range(tree.T + 1):
            for n in tree.nodes_at(t):
                ok, why = shp_matches_stacked(model, Y, n, shp[t][n])
                assert ok, (n, why)


def test_shp_rejects_bad_market():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    with pytest.raises(ValueError):
        SHP(tree, Polyhedron.point((0, 0)))
