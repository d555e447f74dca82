"""Shuffle-algebra oracle: symmetric rational functions with a Θ-action.

A level-n element is stored as ``num / (pden * V_n**2)`` where
``V_n = prod_{i<j} (x_i - x_j)``, ``num`` is a Laurent polynomial in
(q1, q2, x1..xn) and ``pden`` depends on q1, q2 only.  The pole bound on the
diagonals is therefore structural; the exact division by V_n inside the
product is where a violation would surface.

u[1,d] acts by left shuffle multiplication with x^d and Th[0,k] by
multiplication with h_k, the z^-k coefficient of prod_i phi(z, x_i).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import ZZ
from sympy.polys.rings import ring

from .coeff import (BadPointError, EvalAssign, LaurentPoly, Scalar, kernel_chi, phi_coeff,
                    specialize_int, specialize_poly)
from .freealg import AlgElem, Word, u
from .linalg import rank_mod
from .relations import Relator

#: sign of the kernel chi_eps(x, y) / (x - y)^3 used by shuffle_mul
KERNEL_EPS = -1

DEFAULT_PRIME = 2147483647


def _names(n: int) -> List[str]:
    return ["q1", "q2"] + [f"x{i + 1}" for i in range(n)]


def _lift(f: LaurentPoly, nvars: int) -> LaurentPoly:
    """Embed a polynomial in the first f.nvars variables into ``nvars`` variables."""
    pad = (0,) * (nvars - f.nvars)
    return LaurentPoly._raw({e + pad: c for e, c in f.terms.items()}, nvars)


def _x(i: int, n: int, power: int = 1) -> LaurentPoly:
    return LaurentPoly.gen(2 + i, 2 + n, power)


def _div_linear(f: LaurentPoly, i: int, j: int) -> LaurentPoly:
    """Exact quotient f / (v_i - v_j) (variable indices); ValueError if inexact."""
    if not f.terms:
        return f
    by_deg: Dict[int, Dict[Tuple[int, ...], int]] = {}
    for e, c in f.terms.items():
        rest = e[:i] + (0,) + e[i + 1:]
        by_deg.setdefault(e[i], {})[rest] = c
    top, bottom = max(by_deg), min(by_deg)
    quot: Dict[Tuple[int, ...], int] = {}
    carry: Dict[Tuple[int, ...], int] = {}  # Q_k for the current k
    for k in range(top, bottom - 1, -1):
        # Q_{k-1} = P_k + v_j * Q_k
        nxt = dict(by_deg.get(k, {}))
        for e, c in carry.items():
            e2 = e[:j] + (e[j] + 1,) + e[j + 1:]
            v = nxt.get(e2, 0) + c
            if v:
                nxt[e2] = v
            else:
                nxt.pop(e2, None)
        if k == bottom:
            if nxt:
                raise ValueError("polynomial is not divisible by the linear factor")
            break
        for e, c in nxt.items():
            quot[e[:i] + (k - 1,) + e[i + 1:]] = c
        carry = nxt
    return LaurentPoly._raw(quot, f.nvars)


@lru_cache(maxsize=None)
def _vandermonde(vs: Tuple[int, ...], nvars: int) -> LaurentPoly:
    out = LaurentPoly.constant(1, nvars)
    for a, b in combinations(vs, 2):
        out = out * (LaurentPoly.gen(a, nvars) - LaurentPoly.gen(b, nvars))
    return out


@lru_cache(maxsize=None)
def _chi_xy(eps: int, a: int, b: int, nvars: int) -> LaurentPoly:
    out = LaurentPoly({}, nvars)
    for (da, db), c in kernel_chi(eps).items():
        out = out + _lift(c.num, nvars) * LaurentPoly.gen(a, nvars, da) * LaurentPoly.gen(b, nvars, db)
    return out


class SymRat:
    """Symmetric rational function ``num / (pden * V_n^2)`` in x1..xn over Q(q1, q2)."""

    __slots__ = ("n", "num", "pden")

    def __init__(self, n: int, num: LaurentPoly, pden: Optional[LaurentPoly] = None):
        if num.nvars != n + 2:
            raise ValueError(f"numerator has {num.nvars} variables, expected {n + 2}")
        self.n = n
        self.num = num
        self.pden = pden if pden is not None else LaurentPoly.constant(1, 2)

    @classmethod
    def one(cls) -> "SymRat":
        return cls(0, LaurentPoly.constant(1, 2))

    @classmethod
    def zero(cls, n: int) -> "SymRat":
        return cls(n, LaurentPoly({}, n + 2))

    @classmethod
    def power(cls, d: int) -> "SymRat":
        """x1^d in one variable."""
        return cls(1, _x(0, 1, d))

    def __bool__(self):
        return bool(self.num.terms)

    def _check(self, other: "SymRat"):
        if self.n != other.n:
            raise ValueError(f"level mismatch: {self.n} vs {other.n}")

    def __eq__(self, other):
        if not isinstance(other, SymRat):
            return NotImplemented
        return self.n == other.n and (
            self.num * _lift(other.pden, self.n + 2) == other.num * _lift(self.pden, self.n + 2))

    def __add__(self, other: "SymRat") -> "SymRat":
        self._check(other)
        if self.pden == other.pden:
            return SymRat(self.n, self.num + other.num, self.pden)
        nv = self.n + 2
        return SymRat(self.n, self.num * _lift(other.pden, nv) + other.num * _lift(self.pden, nv),
                      self.pden * other.pden)

    def __neg__(self):
        return SymRat(self.n, -self.num, self.pden)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Scalar) -> "SymRat":
        c = Scalar.of(c)
        return SymRat(self.n, self.num * _lift(c.num, self.n + 2), self.pden * c.den)

    def is_symmetric(self) -> bool:
        nv = self.n + 2
        return all(self.num.permute_vars({2 + i: 3 + i, 3 + i: 2 + i}, nv) == self.num
                   for i in range(self.n - 1))

    def normalized(self) -> "SymRat":
        """Cancel the common factor of num and pden; pden gets positive leading coefficient."""
        if not self.num.terms:
            return SymRat.zero(self.n)
        nv = self.n + 2
        lo = self.num.min_exponents()
        plo = self.pden.min_exponents()
        R, *_ = ring(_names(self.n), ZZ)
        N = R.from_dict({tuple(a - b for a, b in zip(e, lo)): c for e, c in self.num.terms.items()})
        D = R.from_dict({tuple(a - b for a, b in zip(e + (0,) * self.n, plo + (0,) * self.n)): c
                         for e, c in self.pden.terms.items()})
        g = N.gcd(D)
        N, D = N.exquo(g), D.exquo(g)
        if D.LC < 0:
            N, D = -N, -D
        shift = tuple(a - b for a, b in zip(lo, plo + (0,) * self.n))
        num = LaurentPoly({tuple(e): int(c) for e, c in N.to_dict().items()}, nv).shift(shift)
        den = LaurentPoly({tuple(e)[:2]: int(c) for e, c in D.to_dict().items()}, 2)
        return SymRat(self.n, num, den)

    def text(self) -> str:
        """Canonical "num / den" text; den is written as (pden)*V^2."""
        s = self.normalized()
        v = "*".join(f"(x{i + 1}-x{j + 1})^2" for i, j in combinations(range(self.n), 2))
        den = f"({s.pden.text(['q1', 'q2'])})" + (f"*{v}" if v else "")
        return f"({s.num.text(_names(self.n))}) / {den}"

    def __repr__(self):
        return f"SymRat(n={self.n}, {self.text()})"

    def evaluate(self, a: EvalAssign) -> int:
        """Value at (q1, q2, x1..xn) = a; raises BadPointError on a pole."""
        p = a.p
        xs = a.x[:self.n]
        if len(xs) < self.n:
            raise ValueError(f"point has {len(a.x)} x-values, need {self.n}")
        if any(not x % p for x in xs):
            raise BadPointError("x value is zero")
        d = specialize_poly(self.pden, a)
        for i, j in combinations(range(self.n), 2):
            d = d * (xs[i] - xs[j]) ** 2 % p
        if not d:
            raise BadPointError("denominator vanishes at evaluation point")
        return self.num.eval_mod(a.params + tuple(xs), p) * pow(d, -1, p) % p


def shuffle_mul(F: SymRat, G: SymRat, eps: int = KERNEL_EPS) -> SymRat:
    """Shuffle product with kernel chi_eps(x, y) / (x - y)^3, normalized by 1/(n! m!)."""
    n, m = F.n, G.n
    N = n + m
    nv = N + 2
    if n == 0 or m == 0:
        return SymRat(N, _lift(F.num, nv) * _lift(G.num, nv), F.pden * G.pden)
    total = LaurentPoly({}, nv)
    for A in combinations(range(N), n):
        B = [j for j in range(N) if j not in A]
        sign = sum(1 for i in A for j in B if i > j) % 2
        fa = F.num.permute_vars({2 + k: 2 + v for k, v in enumerate(A)}, nv)
        gb = G.num.permute_vars({2 + k: 2 + v for k, v in enumerate(B)}, nv)
        term = fa * gb * _vandermonde(tuple(2 + v for v in A), nv) * _vandermonde(tuple(2 + v for v in B), nv)
        for i in A:
            for j in B:
                term = term * _chi_xy(eps, 2 + i, 2 + j, nv)
        total = total - term if sign else total + term
    for i, j in combinations(range(N), 2):
        total = _div_linear(total, 2 + i, 2 + j)
    return SymRat(N, total, F.pden * G.pden)


@lru_cache(maxsize=None)
def _h_poly(k: int, n: int) -> LaurentPoly:
    """h_k(x1..xn) as a polynomial in (q1, q2, x1..xn)."""
    nv = n + 2
    # truncated product of the series sum_s phi_s x_i^s t^s
    series = [LaurentPoly.constant(1, nv)] + [LaurentPoly({}, nv)] * k
    for i in range(n):
        new = [LaurentPoly({}, nv) for _ in range(k + 1)]
        for a, c in enumerate(series):
            if not c.terms:
                continue
            for s in range(k + 1 - a):
                new[a + s] = new[a + s] + c * _lift(phi_coeff(s), nv) * _x(i, n, s)
        series = new
    return series[k]


def theta_op(k: int, F: SymRat) -> SymRat:
    """Th[0,k] acting on F: multiplication by h_k(x1..xn)."""
    if k < 0:
        raise ValueError(f"theta_op needs k >= 0, got {k}")
    if k == 0:
        return F
    return SymRat(F.n, F.num * _h_poly(k, F.n), F.pden)


@lru_cache(maxsize=4096)
def _word_on_vacuum(word: Word, eps: int) -> SymRat:
    if not word:
        return SymRat.one()
    g, rest = word[0], word[1:]
    inner = _word_on_vacuum(rest, eps)
    if g.level == 1:
        return shuffle_mul(SymRat.power(g.index), inner, eps)
    return theta_op(g.index, inner)


def act_on_vacuum(x: AlgElem, eps: int = KERNEL_EPS) -> SymRat:
    """x . 1 in the oracle, exactly; x must have a single level."""
    levels = {sum(g.level for g in w) for w in x.terms}
    if len(levels) > 1:
        raise ValueError("element mixes levels")
    n = levels.pop() if levels else 0
    out = SymRat.zero(n)
    for w, c in x.items():
        out = out + _word_on_vacuum(w, eps).scale(c)
    return out


def can_map(x: AlgElem, eps: int = KERNEL_EPS) -> SymRat:
    """Image of an element of the u[1,*]-subalgebra."""
    for w in x.terms:
        if any(g.level == 0 for g in w):
            raise ValueError("can_map is defined on u[1,*] words only; use theta_op for Th")
    return act_on_vacuum(x, eps)


# ---------------------------------------------------------------------------
# evaluation mode

@dataclass(frozen=True)
class EvalPointSet:
    """``count`` points sharing one (q1, q2); each has ``n_max`` distinct nonzero x's."""

    p: int
    seed: int
    count: int
    n_max: int = 6
    attempt: int = 0
    points: Tuple[EvalAssign, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.count < 1 or self.n_max < 0:
            raise ValueError("need count >= 1 and n_max >= 0")
        base = EvalAssign.from_seed(self.p, self.seed if not self.attempt else f"{self.seed}/{self.attempt}")
        rng = random.Random(f"{self.p}:{self.seed}:{self.attempt}:x")
        pts, seen = [], set()
        while len(pts) < self.count:
            xs = tuple(rng.sample(range(1, self.p), self.n_max)) if self.n_max else ()
            if xs in seen and self.n_max:
                continue
            seen.add(xs)
            pts.append(EvalAssign(self.p, base.q1, base.q2, xs))
            if not self.n_max:
                break
        object.__setattr__(self, "points", tuple(pts))

    def __len__(self):
        return len(self.points)

    def redraw(self) -> "EvalPointSet":
        return EvalPointSet(self.p, self.seed, self.count, self.n_max, self.attempt + 1)


class _PointEvaluator:
    """Memoized value of word . 1 restricted to variable subsets, at one point."""

    def __init__(self, a: EvalAssign, eps: int = KERNEL_EPS):
        self.a = a
        self.p = a.p
        self.xs = a.x
        chi = [(dz, dw, specialize_int(c, a)) for (dz, dw), c in kernel_chi(eps).items()]
        p = self.p
        n = len(self.xs)
        self.omega = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                xi, xj = self.xs[i], self.xs[j]
                diff = (xi - xj) % p
                if not diff:
                    raise BadPointError("coincident x values")
                num = sum(c * pow(xi, dz, p) * pow(xj, dw, p) for dz, dw, c in chi) % p
                self.omega[i][j] = num * pow(diff, -3, p) % p
        self._phi: List[int] = []
        self.memo: Dict[Tuple[Word, int], int] = {}

    def phi(self, s: int) -> int:
        while len(self._phi) <= s:
            self._phi.append(specialize_poly(phi_coeff(len(self._phi)), self.a))
        return self._phi[s]

    def h(self, k: int, mask: int) -> int:
        p = self.p
        series = [1] + [0] * k
        for i, x in enumerate(self.xs):
            if not mask >> i & 1:
                continue
            new = [0] * (k + 1)
            for a, c in enumerate(series):
                if c:
                    xp = 1
                    for s in range(k + 1 - a):
                        new[a + s] = (new[a + s] + c * self.phi(s) * xp) % p
                        xp = xp * x % p
            series = new
        return series[k]

    def word(self, w: Word, mask: int) -> int:
        if not w:
            return 1 if mask == 0 else 0
        key = (w, mask)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        g, rest = w[0], w[1:]
        p = self.p
        if g.level == 0:
            val = self.h(g.index, mask) * self.word(rest, mask) % p if g.index else self.word(rest, mask)
        else:
            val = 0
            members = [i for i in range(len(self.xs)) if mask >> i & 1]
            for i in members:
                sub = mask & ~(1 << i)
                t = pow(self.xs[i], g.index, p) * self.word(rest, sub) % p
                if not t:
                    continue
                for j in members:
                    if j != i:
                        t = t * self.omega[i][j] % p
                val += t
            val %= p
        self.memo[key] = val
        return val


def evaluate_on_vacuum(x: AlgElem, a: EvalAssign, eps: int = KERNEL_EPS) -> int:
    """(x . 1)(a) mod p; ``a.x`` supplies at least level(x) x-values."""
    ev = _PointEvaluator(a, eps)
    p = a.p
    acc = 0
    for w, c in x.items():
        n = sum(g.level for g in w)
        if n > len(a.x):
            raise ValueError(f"point has {len(a.x)} x-values, word needs {n}")
        acc += specialize_int(c, a) * ev.word(w, (1 << n) - 1)
    return acc % p


# ---------------------------------------------------------------------------
# checks

PROBE_S = range(-2, 3)
PROBE_ST = range(-1, 2)
EXACT_MAX_VARS = 3


def probes(test_level: int) -> List[AlgElem]:
    """Probe vectors as words applied to the vacuum."""
    if test_level == 0:
        return [AlgElem.one()]
    if test_level == 1:
        return [u(s) for s in PROBE_S]
    if test_level == 2:
        return [u(s) * u(t) for s in PROBE_ST for t in PROBE_ST]
    raise ValueError(f"test_level must be 0, 1 or 2, got {test_level}")


def rep_check_relator(rel: Relator, test_level: int, pts: Optional[EvalPointSet] = None,
                      mode: str = "auto", eps: int = KERNEL_EPS, max_redraws: int = 5) -> bool:
    """True iff rel acts as zero on every probe of ``test_level``.

    In auto mode the vacuum probe is checked as an exact rational function when
    the image has at most EXACT_MAX_VARS variables; everything else is checked
    at the points of ``pts`` (exact Θ-actions on 3 variables get slow).
    """
    if mode not in ("auto", "exact", "modular"):
        raise ValueError(f"unknown mode {mode!r}")
    if not rel.elem:
        return True
    level = rel.bidegree.n + test_level
    for pr in probes(test_level):
        x = rel.elem * pr
        if mode == "exact" or (mode == "auto" and test_level == 0 and level <= EXACT_MAX_VARS):
            if act_on_vacuum(x, eps):
                return False
            continue
        cur = pts or EvalPointSet(DEFAULT_PRIME, 0, 3, max(level, 1))
        for _ in range(max_redraws + 1):
            try:
                if any(evaluate_on_vacuum(x, a, eps) for a in cur.points):
                    return False
                break
            except BadPointError:
                cur = cur.redraw()
        else:
            raise BadPointError("no usable evaluation points after redraws")
    return True


def eval_rank(elems: Sequence[SymRat], pts: EvalPointSet, max_redraws: int = 5) -> int:
    """Rank of the (elements x points) value matrix over F_p: a lower bound on dim span."""
    if len(pts) < len(elems):
        raise ValueError(f"need at least {len(elems)} points, got {len(pts)}")
    if not elems:
        return 0
    cur = pts
    for _ in range(max_redraws + 1):
        try:
            rows = [[F.evaluate(a) for a in cur.points] for F in elems]
            return rank_mod(rows, cur.p)
        except BadPointError:
            cur = cur.redraw()
    raise BadPointError("no usable evaluation points after redraws")
