"""Exact coefficients: Laurent polynomials and rational functions in q1, q2.

The third parameter is folded in as ``q3 = (q1*q2)**-1``.  Everything here is
immutable; finite-field specialization lives at the bottom of the module.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd
from typing import Dict, Iterable, Mapping, Optional, Tuple

from sympy import ZZ
from sympy.polys.rings import ring

Exps = Tuple[int, ...]


class BadPointError(ArithmeticError):
    """A denominator vanished at the chosen evaluation point (retryable)."""


class LaurentPoly:
    """Sparse Laurent polynomial with integer coefficients in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Exps, int]] = None, nvars: int = 2):
        self.nvars = nvars
        if terms:
            self.terms = {e: c for e, c in terms.items() if c}
        else:
            self.terms = {}
        self._hash = None

    @classmethod
    def _raw(cls, terms, nvars):
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, c: int, nvars: int = 2) -> "LaurentPoly":
        return cls._raw({(0,) * nvars: c} if c else {}, nvars)

    @classmethod
    def monomial(cls, exps: Exps, c: int = 1) -> "LaurentPoly":
        return cls._raw({tuple(exps): c} if c else {}, len(exps))

    @classmethod
    def gen(cls, i: int, nvars: int, power: int = 1) -> "LaurentPoly":
        e = [0] * nvars
        e[i] = power
        return cls._raw({tuple(e): 1}, nvars)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and (0,) * self.nvars in self.terms)

    def constant_value(self) -> int:
        return self.terms.get((0,) * self.nvars, 0)

    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.constant(other, self.nvars)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        if isinstance(other, int):
            return LaurentPoly.constant(other, self.nvars)
        raise TypeError(f"cannot combine LaurentPoly with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        if len(self.terms) < len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out = dict(a)
        for e, c in b.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return LaurentPoly._raw(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            if not other:
                return LaurentPoly._raw({}, self.nvars)
            return LaurentPoly._raw({e: c * other for e, c in self.terms.items()}, self.nvars)
        other = self._coerce(other)
        out: Dict[Exps, int] = {}
        if self.nvars == 2:
            for (a1, b1), c1 in self.terms.items():
                for (a2, b2), c2 in other.terms.items():
                    e = (a1 + a2, b1 + b2)
                    out[e] = out.get(e, 0) + c1 * c2
        else:
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(x + y for x, y in zip(e1, e2))
                    out[e] = out.get(e, 0) + c1 * c2
        return LaurentPoly._raw({e: c for e, c in out.items() if c}, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if len(self.terms) != 1:
                raise ValueError("only monomials have Laurent inverses")
            (e, c), = self.terms.items()
            if c not in (1, -1):
                raise ValueError("only unit monomials have Laurent inverses")
            return LaurentPoly._raw({tuple(x * n for x in e): c ** -n}, self.nvars)
        out = LaurentPoly.constant(1, self.nvars)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, exps: Exps) -> "LaurentPoly":
        return LaurentPoly._raw(
            {tuple(x + s for x, s in zip(e, exps)): c for e, c in self.terms.items()}, self.nvars
        )

    def min_exponents(self) -> Exps:
        if not self.terms:
            return (0,) * self.nvars
        return tuple(min(e[i] for e in self.terms) for i in range(self.nvars))

    def content(self) -> int:
        g = 0
        for c in self.terms.values():
            g = gcd(g, c)
        return g

    def leading(self) -> Tuple[Exps, int]:
        e = max(self.terms)
        return e, self.terms[e]

    def exact_div_int(self, k: int) -> "LaurentPoly":
        return LaurentPoly._raw({e: c // k for e, c in self.terms.items()}, self.nvars)

    def permute_vars(self, mapping: Mapping[int, int], nvars: Optional[int] = None) -> "LaurentPoly":
        """Rename variable i to mapping.get(i, i) inside an ``nvars``-variable ring."""
        n = self.nvars if nvars is None else nvars
        out: Dict[Exps, int] = {}
        for e, c in self.terms.items():
            ne = [0] * n
            for i, x in enumerate(e):
                if x:
                    ne[mapping.get(i, i)] += x
            t = tuple(ne)
            out[t] = out.get(t, 0) + c
        return LaurentPoly._raw({e: c for e, c in out.items() if c}, n)

    def eval_mod(self, values: Tuple[int, ...], p: int) -> int:
        acc = 0
        for e, c in self.terms.items():
            t = c
            for v, x in zip(values, e):
                if x:
                    t = t * pow(v, x, p)
            acc += t
        return acc % p

    def __repr__(self):
        return f"LaurentPoly({self.terms!r}, nvars={self.nvars})"

    def text(self, names: Iterable[str]) -> str:
        names = list(names)
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            mono = "*".join(f"{n}^{x}" for n, x in zip(names, e))
            parts.append(f"{self.terms[e]}*{mono}")
        return " + ".join(parts)


def ParamLaurent(terms: Optional[Mapping[Tuple[int, int], int]] = None) -> LaurentPoly:
    """Laurent polynomial in (q1, q2)."""
    return LaurentPoly(terms, 2)


Q1 = LaurentPoly.gen(0, 2)
Q2 = LaurentPoly.gen(1, 2)
Q3 = LaurentPoly.monomial((-1, -1))
ONE_P = LaurentPoly.constant(1, 2)
ZERO_P = LaurentPoly.constant(0, 2)


_ZQ, _zq1, _zq2 = ring("q1,q2", ZZ)


def _to_ring(p: LaurentPoly):
    return _ZQ.from_dict(dict(p.terms))


def _from_ring(f) -> LaurentPoly:
    return LaurentPoly({tuple(e): int(c) for e, c in f.to_dict().items()}, 2)


def _normalize(num: LaurentPoly, den: LaurentPoly) -> Tuple[LaurentPoly, LaurentPoly]:
    if den.is_zero():
        raise ZeroDivisionError("zero denominator")
    if num.is_zero():
        return ZERO_P, ONE_P
    sa, sb = den.min_exponents()
    if sa or sb:
        den = den.shift((-sa, -sb))
        num = num.shift((-sa, -sb))
    if den.is_constant():
        c = den.constant_value()
        g = gcd(num.content(), c)
        if c < 0:
            g = -g
        if g != 1:
            num, den = num.exact_div_int(g), LaurentPoly.constant(c // g, 2)
        return num, den
    na, nb = num.min_exponents()
    P = _to_ring(num.shift((-na, -nb)))
    D = _to_ring(den)
    g = P.gcd(D)
    P, D = P.exquo(g), D.exquo(g)
    if D.LC < 0:
        P, D = -P, -D
    return _from_ring(P).shift((na, nb)), _from_ring(D)


class Scalar:
    """Element of Q(q1, q2), kept as a normalized quotient of Laurent polynomials.

    The denominator has no monomial factor (those are moved into the numerator),
    is coprime to the numerator and has positive leading coefficient.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num=0, den=1, _normalized: bool = False):
        if isinstance(num, int):
            num = LaurentPoly.constant(num, 2)
        if isinstance(den, int):
            den = LaurentPoly.constant(den, 2)
        if not _normalized:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def of(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, int):
            return cls(LaurentPoly.constant(x, 2), ONE_P, _normalized=True)
        if isinstance(x, LaurentPoly):
            return cls(x, ONE_P, _normalized=True)
        raise TypeError(f"cannot make a Scalar from {type(x).__name__}")

    def normalize(self) -> "Scalar":
        return Scalar(self.num, self.den)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_laurent(self) -> bool:
        return self.den == ONE_P

    def __bool__(self):
        return not self.num.is_zero()

    def __eq__(self, other):
        if isinstance(other, (int, LaurentPoly)):
            other = Scalar.of(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def cross_equal(self, other: "Scalar") -> bool:
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __add__(self, other):
        other = Scalar.of(other)
        if self.den == other.den:
            if self.den == ONE_P:
                return Scalar(self.num + other.num, ONE_P, _normalized=True)
            return Scalar(self.num + other.num, self.den)
        return Scalar(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        return self + (-Scalar.of(other))

    def __rsub__(self, other):
        return Scalar.of(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            if self.den == ONE_P:
                return Scalar(self.num * other, ONE_P, _normalized=True)
            other = Scalar.of(other)
        elif not isinstance(other, Scalar):
            other = Scalar.of(other)
        if self.den == ONE_P and other.den == ONE_P:
            return Scalar(self.num * other.num, ONE_P, _normalized=True)
        return Scalar(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero Scalar")
        return Scalar(self.den, self.num)

    def __truediv__(self, other):
        return self * Scalar.of(other).inverse()

    def __rtruediv__(self, other):
        return Scalar.of(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def text(self) -> str:
        names = ("q1", "q2")
        return f"({self.num.text(names)})/({self.den.text(names)})"

    __str__ = text

    def __repr__(self):
        return f"Scalar({self.text()!r})"

    @classmethod
    def parse(cls, s: str) -> "Scalar":
        m = re.fullmatch(r"\s*\((.*)\)\s*/\s*\((.*)\)\s*", s)
        if not m:
            raise ValueError(f"not a canonical scalar: {s!r}")
        return cls(_parse_laurent(m.group(1)), _parse_laurent(m.group(2)))


_MONO_RE = re.compile(r"\s*(-?\d+)\*q1\^(-?\d+)\*q2\^(-?\d+)\s*")


def _parse_laurent(s: str) -> LaurentPoly:
    s = s.strip()
    if s == "0":
        return ZERO_P
    terms: Dict[Tuple[int, int], int] = {}
    for part in s.split(" + "):
        m = _MONO_RE.fullmatch(part)
        if not m:
            raise ValueError(f"bad monomial {part!r}")
        e = (int(m.group(2)), int(m.group(3)))
        terms[e] = terms.get(e, 0) + int(m.group(1))
    return LaurentPoly(terms, 2)


ZERO = Scalar.of(0)
ONE = Scalar.of(1)


# ---------------------------------------------------------------------------
# parameter functions

def elem_sym(k: int) -> Scalar:
    """e_k(q1, q2, q3) with q3 = 1/(q1 q2)."""
    if not isinstance(k, int) or not 0 <= k <= 3:
        raise ValueError(f"elem_sym needs 0 <= k <= 3, got {k!r}")
    return _ELEM[k]


_ELEM = (
    ONE,
    Scalar.of(Q1 + Q2 + Q3),
    Scalar.of(Q1 * Q2 + Q1 * Q3 + Q2 * Q3),
    ONE,
)


def elem_sym_signed(j: int, eps: int) -> Scalar:
    """e_j of (q1^eps, q2^eps, q3^eps); for eps = -1 this is e_{3-j}."""
    return _ELEM[j] if eps == 1 else _ELEM[3 - j]


def kernel_chi(eps: int) -> Dict[Tuple[int, int], Scalar]:
    """prod_i (z - q_i^eps w) as {(z-degree, w-degree): coefficient}."""
    if eps not in (1, -1):
        raise ValueError(f"eps must be +1 or -1, got {eps!r}")
    return {(3 - j, j): elem_sym_signed(j, eps) * (-1) ** j for j in range(4)}


def alpha(k: int) -> Scalar:
    """Structure constant of ad(u[0,k]) on u[1,*]: (1/k) sum_i (q_i^k - q_i^-k)."""
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"alpha needs k >= 1, got {k!r}")
    return _alpha(k)


@lru_cache(maxsize=None)
def _alpha(k: int) -> Scalar:
    num = ZERO_P
    for q in (Q1, Q2, Q3):
        num = num + q ** k - q ** (-k)
    return Scalar(num, LaurentPoly.constant(k, 2))


@lru_cache(maxsize=None)
def complete_sym(s: int) -> LaurentPoly:
    """h_s(q1, q2, q3) as a Laurent polynomial."""
    out = ZERO_P
    for a in range(s + 1):
        for b in range(s - a + 1):
            c = s - a - b
            out = out + LaurentPoly.monomial((a - c, b - c))
    return out


@lru_cache(maxsize=None)
def phi_coeff(s: int) -> LaurentPoly:
    """Coefficient of t^s in prod_i (1 - t/q_i) / (1 - q_i t)."""
    if s < 0:
        return ZERO_P
    out = ZERO_P
    for j in range(min(3, s) + 1):
        out = out + _ELEM[3 - j].num * complete_sym(s - j) * (-1) ** j
    return out


# ---------------------------------------------------------------------------
# finite fields

@dataclass(frozen=True)
class FFElem:
    value: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p)

    def _other(self, o) -> int:
        if isinstance(o, FFElem):
            if o.p != self.p:
                raise ValueError("mixed moduli")
            return o.value
        return o

    def __add__(self, o):
        return FFElem(self.value + self._other(o), self.p)

    __radd__ = __add__

    def __sub__(self, o):
        return FFElem(self.value - self._other(o), self.p)

    def __neg__(self):
        return FFElem(-self.value, self.p)

    def __mul__(self, o):
        return FFElem(self.value * self._other(o), self.p)

    __rmul__ = __mul__

    def inverse(self) -> "FFElem":
        if not self.value:
            raise ZeroDivisionError("inverse of 0 in F_p")
        return FFElem(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, o):
        return self * FFElem(self._other(o), self.p).inverse()

    def __eq__(self, o):
        if isinstance(o, int):
            return self.value == o % self.p
        if isinstance(o, FFElem):
            return self.p == o.p and self.value == o.value
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value


DEGENERACY_ORDER = 12


@dataclass(frozen=True)
class EvalAssign:
    """Values of q1, q2 (and optionally x_1..x_n) in F_p."""

    p: int
    q1: int
    q2: int
    x: Tuple[int, ...] = field(default=())

    @property
    def q3(self) -> int:
        return pow(self.q1 * self.q2, -1, self.p)

    @property
    def params(self) -> Tuple[int, int]:
        return (self.q1 % self.p, self.q2 % self.p)

    def is_degenerate(self, order: int = DEGENERACY_ORDER) -> bool:
        p = self.p
        q1, q2 = self.q1 % p, self.q2 % p
        if not q1 or not q2:
            return True
        qs = (q1, q2, self.q3)
        if len(set(qs)) < 3:
            return True
        for q in qs:
            t = 1
            for _ in range(order):
                t = t * q % p
                if t == 1:
                    return True
        return False

    @classmethod
    def random(cls, p: int, rng: random.Random, nx: int = 0, max_tries: int = 100) -> "EvalAssign":
        for _ in range(max_tries):
            a = cls(p, rng.randrange(2, p - 1), rng.randrange(2, p - 1),
                    tuple(rng.randrange(1, p) for _ in range(nx)))
            if not a.is_degenerate():
                return a
        raise BadPointError(f"no nondegenerate point found mod {p}")

    @classmethod
    def from_seed(cls, p: int, seed: int, nx: int = 0) -> "EvalAssign":
        return cls.random(p, random.Random(f"{p}:{seed}"), nx)


def specialize_poly(f: LaurentPoly, a: EvalAssign) -> int:
    return f.eval_mod(a.params, a.p)


def specialize(s: Scalar, a: EvalAssign) -> FFElem:
    """Value of ``s`` at ``a`` in F_p; raises BadPointError if the denominator vanishes."""
    return FFElem(specialize_int(s, a), a.p)


def specialize_int(s: Scalar, a: EvalAssign) -> int:
    p = a.p
    if a.q1 % p == 0 or a.q2 % p == 0:
        raise BadPointError("q1 or q2 is zero")
    d = s.den.eval_mod(a.params, p)
    if not d:
        raise BadPointError(f"denominator of {s.text()} vanishes mod {p}")
    return s.num.eval_mod(a.params, p) * pow(d, -1, p) % p
