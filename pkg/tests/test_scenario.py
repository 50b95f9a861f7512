import numpy as np
import pytest
from conftest import random_measure

from riskset._rational import ONE, ZERO, Rat
from riskset.polycalc import Polyhedron, minkowski_sum
from riskset.scenario import (NodeVector, ScenarioTree, TreeError, VectorMeasure, cond_expect,
                              cond_expect_set, w_ts, xi)


def _q(tree, *rows):
    return VectorMeasure(tree, [dict(zip((1, 2), map(Rat, r))) for r in rows])


def test_tree_validation():
    with pytest.raises(TreeError):
        ScenarioTree([None, 0, 0], [1, "1/2", "1/3"], 1)
    with pytest.raises(TreeError):
        ScenarioTree([None, 0, 0, 1], [1, "1/2", "1/2", 1], 1)  # leaves at two times
    with pytest.raises(TreeError):
        ScenarioTree([None, 0], [1, 1], 2, m=3)
    with pytest.raises(TreeError):
        ScenarioTree([None, 0, 0], [1, 0, 1], 1)


def test_tree_json_roundtrip(rng):
    tree = ScenarioTree.random(rng, 3, 3, 2, m=1)
    assert ScenarioTree.from_json(tree.to_json()) == tree
    assert sum(tree.prob[n] for n in tree.leaves) == 1


def test_xi_identity_measure(rng):
    tree = ScenarioTree.random(rng, 3, 3, 2)
    P = VectorMeasure.reference(tree)
    for t in range(tree.T + 1):
        for s in range(t, tree.T + 1):
            assert all(v == (ONE, ONE) for v in xi(P, t, s).values())


def test_xi_example(two_child):
    x = xi(_q(two_child, ("3/4", "1/4")), 0, 1)
    assert x[1] == (Rat(3, 2),) and x[2] == (Rat(1, 2),)


def test_xi_degenerate_measure(two_child):
    # the defining case split returns 1 only where the time-t density
    # vanishes; at the root it is 1, so the dead branch gets ratio 0
    x = xi(_q(two_child, (1, 0)), 0, 1)
    assert x[1] == (Rat(2),) and x[2] == (ZERO,)


def test_xi_zero_density_branch():
    tree = ScenarioTree.regular(2, 2, 1)
    # Q never visits node 2, so xi_{1,2} below node 2 falls back to 1
    q = {1: ONE, 2: ZERO, 3: Rat(1, 2), 4: Rat(1, 2), 5: Rat(1, 4), 6: Rat(3, 4)}
    x = xi(VectorMeasure(tree, [q]), 1, 2)
    assert x[5] == (ONE,) and x[6] == (ONE,)
    assert x[3] == (ONE,) and x[4] == (ONE,)


def test_xi_conditional_mean_one(rng):
    tree = ScenarioTree.random(rng, 3, 3, 2)
    Q = random_measure(rng, tree, zeros=True)
    for t in range(tree.T):
        for s in range(t + 1, tree.T + 1):
            x = xi(Q, t, s)
            for a in tree.nodes_at(t):
                for i in range(tree.d):
                    if Q.density(i, a) > 0:
                        tot = sum(tree.cond_prob(n, a) * x[n][i] for n in tree.desc_at(a, s))
                        assert tot == 1


def test_cond_expect_examples(two_child):
    X = NodeVector(two_child, 1, {1: (4,), 2: (2,)})
    assert cond_expect(VectorMeasure.reference(two_child), X, 0)[0] == (3,)
    assert cond_expect(_q(two_child, ("3/4", "1/4")), X, 0)[0] == (Rat(7, 2),)
    assert cond_expect(_q(two_child, ("3/4", "1/4")), X, 1) == X


def test_cond_expect_errors(two_child, rng):
    X = NodeVector(two_child, 0, {0: (1,)})
    with pytest.raises(TreeError):
        cond_expect(VectorMeasure.reference(two_child), X, 1)
    other = ScenarioTree.random(rng, 1, 3, 1)
    with pytest.raises(TreeError):
        cond_expect(VectorMeasure.reference(other), NodeVector.constant(two_child, 1, (1,)), 0)


def test_tower_property(rng):
    for _ in range(10):
        tree = ScenarioTree.random(rng, 3, 3, 2)
        Q = random_measure(rng, tree, zeros=True)
        X = NodeVector.from_fn(tree, 3, lambda n: tuple(Rat(int(v), 3)
                                                        for v in rng.integers(-9, 9, size=2)))
        for t in range(4):
            for u in range(t, 4):
                assert cond_expect(Q, cond_expect(Q, X, u), t) == cond_expect(Q, X, t)


def test_w_ts_examples(two_child):
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    Q = VectorMeasure(tree, [{1: Rat(3, 4), 2: Rat(1, 4)}, {1: Rat(1, 4), 2: Rat(3, 4)}])
    w = NodeVector(tree, 0, {0: (1, 2)})
    assert w_ts(Q, w, 1)[1] == (Rat(3, 2), ONE)
    assert w_ts(VectorMeasure.reference(tree), w, 1)[2] == (1, 2)
    zero = NodeVector.constant(tree, 0, (0, 0))
    assert all(v == (0, 0) for v in w_ts(Q, zero, 1).values())


def test_w_ts_composition(rng):
    for _ in range(10):
        tree = ScenarioTree.random(rng, 3, 2, 2)
        Q = random_measure(rng, tree, zeros=True)
        for t in range(4):
            w = NodeVector.from_fn(tree, t, lambda n: tuple(Rat(int(v))
                                                            for v in rng.integers(0, 4, size=2)))
            for s in range(t, 4):
                for u in range(s, 4):
                    assert w_ts(Q, w_ts(Q, w, s), u) == w_ts(Q, w, u)


def test_cond_expect_set_examples():
    tree = ScenarioTree([None, 0, 0], [1, "3/4", "1/4"], 2)
    P = VectorMeasure.reference(tree)
    sets = {1: Polyhedron.orthant(2, corner=(1, 0)), 2: Polyhedron.orthant(2, corner=(0, 1))}
    assert cond_expect_set(P, sets, 1, 0)[0] == Polyhedron.orthant(2, corner=(Rat(3, 4),
                                                                              Rat(1, 4)))
    cone = {1: Polyhedron.orthant(2), 2: Polyhedron.orthant(2)}
    assert cond_expect_set(P, cone, 1, 0)[0] == Polyhedron.orthant(2)
    half = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    sets = {1: Polyhedron.orthant(2, corner=(2, 0)), 2: Polyhedron.orthant(2, corner=(0, 4))}
    assert cond_expect_set(VectorMeasure.reference(half), sets, 1, 0)[0] == \
        Polyhedron.orthant(2, corner=(1, 2))


def test_cond_expect_set_empty_child():
    tree = ScenarioTree([None, 0, 0], [1, "1/2", "1/2"], 2)
    sets = {1: Polyhedron.orthant(2), 2: Polyhedron.empty(2)}
    out = cond_expect_set(VectorMeasure.reference(tree), sets, 1, 0)[0]
    assert out.is_empty() and "2" in out.note


def test_cond_expect_set_commutes_with_sum(rng):
    from laws import random_upper

    for _ in range(30):
        tree = ScenarioTree.random(rng, 1, 3, 2)
        Q = random_measure(rng, tree)
        kids = tree.nodes_at(1)
        A = {c: random_upper(rng, 2, 2) for c in kids}
        B = {c: random_upper(rng, 2, 2) for c in kids}
        S = {c: minkowski_sum(A[c], B[c]) for c in kids}
        lhs = cond_expect_set(Q, S, 1, 0)[0]
        rhs = minkowski_sum(cond_expect_set(Q, A, 1, 0)[0], cond_expect_set(Q, B, 1, 0)[0])
        assert lhs == rhs


def test_nodevector_algebra(two_child):
    X = NodeVector(two_child, 1, {1: (4,), 2: (2,)})
    Y = NodeVector.constant(two_child, 1, (1,))
    assert (X - Y)[1] == (3,) and (-X)[2] == (-2,)
    assert X.scale(Rat(1, 2))[1] == (2,)
    root = NodeVector(two_child, 0, {0: (5,)})
    assert root.lift(1) == NodeVector.constant(two_child, 1, (5,))
    assert NodeVector.from_json(two_child, X.to_json()) == X
    assert np.isclose(X.as_float()[1][0], 4.0)
