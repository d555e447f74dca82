import random

import pytest
import sympy as sp

from ehall.coeff import LaurentPoly, Scalar

q1, q2 = sp.symbols("q1 q2")


def laurent_to_sympy(f: LaurentPoly, syms=(q1, q2)):
    return sp.Add(*[c * sp.Mul(*[s ** e for s, e in zip(syms, exps)]) for exps, c in f.terms.items()])


def scalar_to_sympy(s: Scalar):
    return laurent_to_sympy(s.num) / laurent_to_sympy(s.den)


def random_laurent(rng: random.Random, nterms=3, span=2, coeff=5) -> LaurentPoly:
    return LaurentPoly({(rng.randint(-span, span), rng.randint(-span, span)): rng.randint(-coeff, coeff)
                        for _ in range(nterms)}, 2)


@pytest.fixture
def rng():
    return random.Random(1234)
