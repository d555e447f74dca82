import random

import pytest

from ehall.coeff import EvalAssign, ONE, Scalar
from ehall.freealg import EMPTY, AlgElem, TH, U, Window, bidegree, commutator, th, theta_weight, u
from ehall.relations import Family, Relator, relator_cubic, relator_quad, relator_theta_comm
from ehall.coproduct import (FAIL, INCONCLUSIVE, PASS, TensorElem, collect_theta_left, counit, counit_left,
                             counit_right, delta, delta_check_relator, delta_left, delta_right, eq1_decompose,
                             eq1_oracle_check, term3_formula)

P = 2147483647
A = EvalAssign.from_seed(P, 0)
W = Window(3, -4, 4, 4)


def naive_delta(word, kmax=12):
    """Untruncated coproduct of a word with theta sums cut at kmax, as {(w1, w2): int}."""
    acc = {(EMPTY, EMPTY): 1}
    for g in word:
        if g.level == 1:
            parts = [((g,), EMPTY)] + [(((TH(k),) if k else EMPTY), (U(g.index - k),)) for k in range(kmax + 1)]
        else:
            parts = [(((TH(i),) if i else EMPTY), ((TH(g.index - i),) if g.index - i else EMPTY))
                     for i in range(g.index + 1)]
        new = {}
        for (a, b), c in acc.items():
            for x, y in parts:
                k = (a + x, b + y)
                new[k] = new.get(k, 0) + c
        acc = new
    return acc


def as_int_dict(t: TensorElem):
    out = {}
    for k, c in t.terms.items():
        assert c.den.terms == {(0, 0): 1} and set(c.num.terms) <= {(0, 0)}
        out[k] = c.num.terms[(0, 0)]
    return out


def test_delta_examples():
    assert delta(AlgElem.one(), W) == TensorElem.simple(AlgElem.one(), AlgElem.one())
    one = AlgElem.one()
    assert delta(th(2), W) == (TensorElem.simple(th(2), one) + TensorElem.simple(th(1), th(1))
                               + TensorElem.simple(one, th(2)))
    ref = (TensorElem.simple(u(0), one) + TensorElem.simple(one, u(0)) + TensorElem.simple(th(1), u(-1))
           + TensorElem.simple(th(2), u(-2)))
    assert delta(u(0), Window(1, -2, 0, 2)) == ref


def test_delta_rejects_out_of_window():
    with pytest.raises(ValueError):
        delta(u(9), W)


def test_delta_matches_naive_expansion():
    rng = random.Random(5)
    w = Window(3, -3, 3, 3)
    for _ in range(40):
        n = rng.randint(1, 3)
        word = tuple(U(rng.randint(-2, 2)) if rng.random() < 0.7 else TH(rng.randint(1, 2)) for _ in range(n))
        if not w.contains(word):
            continue
        d = delta(AlgElem.word(word), w)
        ref = naive_delta(word)
        bad = {(bidegree(a), bidegree(b)) for a, b in ref if not (w.contains(a) and w.contains(b))}
        kept = {k: c for k, c in ref.items() if (bidegree(k[0]), bidegree(k[1])) not in bad}
        assert as_int_dict(d) == kept
        assert d.dropped <= bad


def test_bidegree_bookkeeping():
    for x in [u(1) * u(-1), relator_quad(-1, -1).elem, th(2) * u(0)]:
        for (a, b), _ in delta(x, W).items():
            assert bidegree(a) + bidegree(b) == x.bidegree


def _random_elem(rng):
    word = tuple(U(rng.randint(-1, 1)) if rng.random() < 0.7 else TH(rng.randint(1, 2))
                 for _ in range(rng.randint(1, 2)))
    return AlgElem.word(word, Scalar.of(rng.randint(1, 4)))


def test_delta_multiplicative():
    rng = random.Random(8)
    w = Window(3, -3, 3, 3)
    checked = 0
    for _ in range(50):
        x, y = _random_elem(rng), _random_elem(rng)
        if not w.contains_elem(x * y):
            continue
        lhs = delta(x * y, w)
        rhs = delta(x, w) * delta(y, w)
        keys = (set(lhs.components()) | set(rhs.components())) - lhs.dropped - rhs.dropped
        for k in keys:
            assert lhs.component(k) == rhs.component(k)
            checked += 1
    assert checked > 50


def test_coassociative_on_generators():
    w = Window(1, -6, 6, 6)
    for g in [u(0), u(2), u(-3), th(1), th(3)]:
        d = delta(g, w)
        # compare where neither side can have been cut: total Θ-weight within th_max
        small = lambda t: {k: c for k, c in t.items() if sum(theta_weight(x) for x in k) <= w.th_max}
        assert small(delta_left(d, w)) == small(delta_right(d, w))
        assert small(delta_left(d, w))


def test_counit():
    w = Window(1, -6, 6, 6)
    assert counit(AlgElem.one()) == ONE
    assert not counit(u(0)) and not counit(th(1))
    for g in [u(0), u(-2), th(1), th(4)]:
        d = delta(g, w)
        assert counit_left(d) == g
        assert counit_right(d) == g


def test_tensor_product_rule():
    x, y = u(1), th(2)
    one = AlgElem.one()
    assert TensorElem.simple(x, one) * TensorElem.simple(one, y) == TensorElem.simple(x, y)


def test_eq1():
    res = eq1_decompose(Window(3, -6, 6, 6))
    r = commutator(commutator(u(-1), u(1)), u(0))
    assert res.term1_ok and res.term3_ok
    assert res.term1 == TensorElem.simple(r, AlgElem.one())
    full = delta(r, Window(3, -6, 6, 6))
    assert res.term1 + res.E + res.term3 == full
    got = collect_theta_left(res.term3, 4)
    assert {wr: c for (k, wr), c in got.items() if k == ()} == dict(r.terms)
    ref = (commutator(commutator(u(-2), u(1)), u(0)) + commutator(commutator(u(-1), u(0)), u(0))
           + commutator(commutator(u(-1), u(1)), u(-1)))
    assert {wr: c for (k, wr), c in got.items() if k == (1,)} == dict(ref.terms)
    assert all(k[0].n in (1, 2) for k in res.E.components())


def test_term3_formula_weight_zero():
    f = term3_formula(0)
    r = commutator(commutator(u(-1), u(1)), u(0))
    assert f == {((), wr): c for wr, c in r.terms.items()}


def test_eq1_window_too_small():
    with pytest.raises(ValueError):
        eq1_decompose(Window(3, -2, 2, 2))
    with pytest.raises(ValueError):
        eq1_decompose(Window(2, -6, 6, 6))


def test_eq1_oracle():
    res = eq1_decompose(Window(3, -5, 5, 4))
    assert all(eq1_oracle_check(res, [P], n_points=4).values())


def test_delta_check_examples():
    w = Window(2, -4, 4, 4)
    assert delta_check_relator(relator_theta_comm(1, 2), w, A).status == PASS
    rep = delta_check_relator(relator_quad(-1, -1), w, A)
    assert rep.status == PASS
    assert all(c["certificate"]["recombines"] for c in rep.components)


def test_delta_check_cubic():
    rep = delta_check_relator(relator_cubic(-2), Window(3, -3, 3, 2), A)
    assert rep.status == PASS
    lefts = {c["left"][0] for c in rep.components}
    assert lefts == {0, 1, 2, 3}


def test_delta_check_detects_non_relator():
    fake = Relator(u(0) * u(1), Family.QUAD_TT, (0, 0))
    assert delta_check_relator(fake, Window(2, -2, 2, 2), A).status == FAIL


def test_delta_check_inconclusive_without_relators():
    rep = delta_check_relator(relator_quad(-1, -1), Window(2, -2, 2, 2), A, families=[])
    assert rep.status == INCONCLUSIVE


def test_delta_check_rejects_out_of_window():
    with pytest.raises(ValueError):
        delta_check_relator(relator_quad(0, 0), Window(2, -1, 1, 1), A)
