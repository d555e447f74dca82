import itertools
import random
from collections import Counter

import pytest

from ehall.coeff import EvalAssign, Scalar, alpha, elem_sym
from ehall.freealg import AlgElem, Bidegree, U, Window, ad_u0, commutator, component_words, project, th, u
from ehall.relations import (NOT_IN_WINDOWED_SPAN, Family, kernel_tensor_check, membership,
                             membership_deepening, random_surjection, rank_quotient, relator_R, relator_cubic,
                             relator_mixed, relator_quad, relator_theta_comm, enumerate_relators)

P = 2147483647
A = EvalAssign.from_seed(P, 0)


def int_elem(x: AlgElem) -> dict:
    """Word -> integer coefficient, for relators with constant coefficients."""
    out = {}
    for w, c in x.items():
        assert c.den.terms == {(0, 0): 1} and set(c.num.terms) == {(0, 0)}
        out[tuple(g.index for g in w)] = c.num.terms[(0, 0)]
    return out


def bracket(x: Counter, y: Counter) -> Counter:
    out = Counter()
    for a, c in x.items():
        for b, d in y.items():
            out[a + b] += c * d
            out[b + a] -= c * d
    return out


def R_oracle(m, n, l):
    out = Counter()
    for a, b, c in itertools.permutations((m, n, l)):
        term = bracket(bracket(Counter({(a - 1,): 1}), Counter({(b + 1,): 1})), Counter({(c,): 1}))
        for k, v in term.items():
            out[k] += v
    return {k: v for k, v in out.items() if v}


def test_theta_comm():
    assert not relator_theta_comm(1, 1).elem
    assert relator_theta_comm(1, 2).elem == th(1) * th(2) - th(2) * th(1)
    assert relator_theta_comm(2, 1).elem == -relator_theta_comm(1, 2).elem
    with pytest.raises(ValueError):
        relator_theta_comm(0, 1)


def test_quad_hand_expansion():
    e1, e2 = elem_sym(1), elem_sym(2)
    two = Scalar.of(2)
    ref = ((u(2) * u(-1) - u(-1) * u(2)).scale(two) - (u(1) * u(0)).scale(two * e1)
           + (u(0) * u(1)).scale(two * e2))
    assert relator_quad(-1, -1).elem == ref
    assert relator_quad(-1, -1).bidegree == Bidegree(2, 1)
    r = relator_quad(0, 0).elem
    assert project(r, Bidegree(2, 3)) == r


def test_quad_degenerate_point():
    # q1 = q2 = 1: the kernel becomes (z-w)^3 on both sides
    rel = relator_quad(0, 0).elem
    vals = {tuple(g.index for g in w): c.num.eval_mod((1, 1), P) * pow(c.den.eval_mod((1, 1), P), -1, P) % P
            for w, c in rel.items()}
    binom = [1, -3, 3, -1]
    ref = Counter()
    for j in range(4):
        ref[(3 - j, j)] += binom[j]
        ref[(j, 3 - j)] -= binom[j]
    assert {k: v for k, v in vals.items() if v} == {k: v % P for k, v in ref.items() if v % P}


def test_mixed_examples():
    assert not relator_mixed(-3, 0).elem
    a1 = elem_sym(1) - elem_sym(2)
    assert relator_mixed(-2, 0).elem == commutator(th(1), u(0)) - u(1).scale(a1)
    assert relator_mixed(-2, 5).elem == commutator(th(1), u(5)) - u(6).scale(a1)
    assert a1 == alpha(1)


def test_mixed_matches_ad():
    for b in range(-3, 4):
        assert relator_mixed(-2, b).elem == commutator(th(1), u(b)) - ad_u0(1, u(b))


@pytest.mark.parametrize("m", range(-5, 6))
def test_cubic_residue_vs_commutator(m):
    # residue oracle: monomials of (z+w)(y^2-zw), u_d paired with z^-d
    kernel = {(1, 2, 0): 1, (0, 2, 1): 1, (2, 0, 1): -1, (1, 0, 2): -1}
    ref = {tuple(m + e + 1 for e in exps): c for exps, c in kernel.items()}
    assert int_elem(relator_cubic(m).elem) == ref
    assert relator_cubic(m).elem == commutator(commutator(u(m + 1), u(m + 3)), u(m + 2))
    assert relator_cubic(m).bidegree == Bidegree(3, 3 * m + 6)


def test_cubic_m_minus_two():
    assert relator_cubic(-2).elem == commutator(commutator(u(-1), u(1)), u(0))
    assert project(relator_cubic(-2).elem, Bidegree(3, 0)) == relator_cubic(-2).elem


def test_R_examples():
    assert relator_R(0, 0, 0).elem == relator_cubic(-2).elem.scale(Scalar.of(6))
    assert int_elem(relator_R(1, 0, 0).elem) == R_oracle(1, 0, 0)
    assert len(R_oracle(1, 0, 0)) <= 24
    for m, n, l in [(2, -1, 0), (1, 1, -2), (0, 3, 3)]:
        assert int_elem(relator_R(m, n, l).elem) == R_oracle(m, n, l)
        for perm in itertools.permutations((m, n, l)):
            assert relator_R(*perm).elem == relator_R(m, n, l).elem
        assert relator_R(m, n, l).bidegree == Bidegree(3, m + n + l)


def test_R_diagonal():
    for l in range(-2, 3):
        assert relator_R(l, l, l).elem == commutator(commutator(u(l - 1), u(l + 1)), u(l)).scale(Scalar.of(6))


def test_ad_propagation_identity():
    for k in range(1, 4):
        ak = alpha(k)
        for m, n, l in itertools.product(range(-2, 3), repeat=3):
            lhs = ad_u0(k, relator_R(m, n, l).elem)
            rhs = (relator_R(m + k, n, l).elem + relator_R(m, n + k, l).elem
                   + relator_R(m, n, l + k).elem).scale(ak)
            assert lhs == rhs, (k, m, n, l)


def test_relators_homogeneous():
    for a, b in itertools.product(range(-3, 3), repeat=2):
        assert relator_quad(a, b).bidegree == Bidegree(2, a + b + 3)
        r = relator_mixed(a, b)
        assert not r.elem or r.bidegree == Bidegree(1, a + b + 3)


def test_enumerate_examples():
    quad = [r for r in enumerate_relators(Window(2, -1, 2, 1)) if r.family == Family.QUAD_TT]
    assert [r.params for r in quad] == [(-1, -1)]
    assert not [r for r in enumerate_relators(Window(2, -1, 1, 2)) if r.family == Family.QUAD_TT]
    rels = enumerate_relators(Window(0, 0, 0, 3))
    assert rels and all(r.family == Family.THETA_COMM for r in rels)
    assert [r.params for r in enumerate_relators(Window(0, 0, 0, 3, 3))] == [(1, 2)]
    w = Window(3, -2, 2, 2)
    rels = enumerate_relators(w)
    assert rels == enumerate_relators(w)
    assert all(w.contains_elem(r.elem) and r.elem for r in rels)
    assert [r.sort_key for r in rels] == sorted(r.sort_key for r in rels)


def test_dump_line():
    line = relator_theta_comm(1, 2).dump_line()
    assert line.startswith("THETA_COMM(1,2): [")
    assert '"th[1] th[2]"' in line


def test_component_words_examples():
    w = Window(2, -1, 2, 1)
    assert set(component_words(Bidegree(2, 1), Window(2, -1, 2, 1, 0))) == {
        (U(-1), U(2)), (U(0), U(1)), (U(1), U(0)), (U(2), U(-1))}
    assert component_words(Bidegree(0, 0), w) == [()]
    assert component_words(Bidegree(1, -5), Window(1, 0, 3, 1)) == []


def test_rank_example():
    rep = rank_quotient(Bidegree(2, 1), Window(2, -1, 2, 0), A)
    assert (rep.n_words, rep.n_relators, rep.relator_rank, rep.quotient_rank) == (4, 1, 1, 3)
    ex = rank_quotient(Bidegree(2, 1), Window(2, -1, 2, 0), A, mode="exact")
    assert ex.quotient_rank == 3


def _partitions(k, largest):
    if k == 0:
        return 1
    return sum(_partitions(k - p, p) for p in range(1, min(k, largest) + 1))


@pytest.mark.parametrize("k,thmax", [(2, 2), (3, 3), (4, 2), (4, 4), (5, 3)])
def test_theta_rank_is_partition_count(k, thmax):
    rep = rank_quotient(Bidegree(0, k), Window(0, 0, 0, thmax), A)
    assert rep.quotient_rank == _partitions(k, thmax)


def test_rank_empty_relator_set():
    rep = rank_quotient(Bidegree(1, 0), Window(1, -1, 1, 1), A, families=[Family.QUAD_TT])
    assert rep.n_relators == 0 and rep.quotient_rank == rep.n_words == 3


def test_rank_reproducible():
    b, w = Bidegree(2, 2), Window(2, -2, 3, 2)
    reps = [rank_quotient(b, w, EvalAssign.from_seed(p, s), seed=s)
            for p, s in [(2147483647, 1), (2147483629, 2), (2147483587, 3)]]
    assert len({r.quotient_rank for r in reps}) == 1
    assert rank_quotient(b, w, EvalAssign.from_seed(P, 1), seed=1) == reps[0]


def test_rank_rejects_degenerate():
    with pytest.raises(ValueError):
        rank_quotient(Bidegree(2, 1), Window(2, -1, 2, 0), EvalAssign(P, 1, 1))


def test_membership_trivial():
    r = relator_cubic(-2).elem
    cert = membership(r, Window(3, -1, 1, 1), A)
    assert cert and cert.verify()
    assert cert.relators_used == ["CUBIC(-2)"]


def test_membership_R000():
    cert = membership(relator_R(0, 0, 0).elem, Window(3, -1, 1, 1, 0), A)
    assert cert.modulus is None
    assert [(t.relator.id, t.coeff) for t in cert.combination] == [("CUBIC(-2)", Scalar.of(6))]


def test_membership_R100():
    cert = membership_deepening(relator_R(1, 0, 0).elem, Window(3, -3, 4, 2), A, tw_max=4)
    assert cert and cert.verify()
    assert {"CUBIC(-2)"} < set(cert.relators_used)
    assert any(i.startswith("MIXED") for i in cert.relators_used)
    assert all(c["verified"] for c in cert.cross_checks)


def test_membership_negative_is_window_relative():
    # u[1,0]u[1,1] is not a relator combination in a window without room for anything
    res = membership(u(0) * u(1), Window(2, 0, 1, 1), A)
    assert res is NOT_IN_WINDOWED_SPAN and not res


def test_membership_errors():
    with pytest.raises(ValueError):
        membership(u(0) + u(0) * u(1), Window(2, -1, 1, 1), A)
    with pytest.raises(ValueError):
        membership(u(5), Window(2, -1, 1, 1), A)


def test_kernel_tensor_examples():
    assert kernel_tensor_check([[1, 0], [0, 1]])
    rng = random.Random(3)
    f = random_surjection(3, 2, P, rng)
    assert kernel_tensor_check(f, rng=rng)
    with pytest.raises(ValueError):
        kernel_tensor_check([[0, 0, 0]])


def test_kernel_tensor_random():
    rng = random.Random(11)
    for _ in range(10):
        n = rng.randint(1, 4)
        m = rng.randint(1, n)
        assert kernel_tensor_check(random_surjection(n, m, 101, rng), p=101, rng=rng)


def test_exact_rank_matches_modular():
    w = Window(2, -1, 1, 2)
    for b in [Bidegree(1, 0), Bidegree(1, 1), Bidegree(2, 0), Bidegree(2, 1), Bidegree(2, -1)]:
        if len(component_words(b, w)) > 12:
            continue
        ex = rank_quotient(b, w, A, mode="exact")
        mod = rank_quotient(b, w, A)
        assert ex.quotient_rank == mod.quotient_rank, b
