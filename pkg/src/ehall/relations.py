"""Relator families, windowed enumeration and the linear algebra on top of them.

Ranks and membership are computed over F_p at a random parameter point unless a
component is small enough (at most ``EXACT_MAX_WORDS`` words) for exact work.
"""
from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache
from itertools import permutations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .coeff import (
    ONE,
    BadPointError,
    EvalAssign,
    FFElem,
    LaurentPoly,
    Scalar,
    ZERO,
    elem_sym_signed,
    specialize_int,
)
from .freealg import (
    AlgElem,
    Bidegree,
    U,
    Window,
    Word,
    bidegree,
    commutator,
    component_words,
    th,
    theta_weight,
    u,
    word_text,
)
from .linalg import SparseEchelon, kron_mod, matvec_mod, nullspace_mod, rank_mod

EXACT_MAX_WORDS = 12
MAX_RETRIES = 5


class Family(IntEnum):
    THETA_COMM = 0
    QUAD_TT = 1
    MIXED = 2
    CUBIC = 3
    R_SYM = 4


DEFINING_FAMILIES = (Family.THETA_COMM, Family.QUAD_TT, Family.MIXED, Family.CUBIC)


@dataclass(frozen=True)
class Relator:
    elem: AlgElem
    family: Family
    params: Tuple[int, ...]

    @property
    def id(self) -> str:
        return f"{self.family.name}({','.join(str(p) for p in self.params)})"

    @property
    def bidegree(self) -> Bidegree:
        return self.elem.bidegree

    @property
    def sort_key(self):
        return (int(self.family), self.params)

    def dump_line(self) -> str:
        return f"{self.id}: {json.dumps(self.elem.serialize())}"


# ---------------------------------------------------------------------------
# constructors

@lru_cache(maxsize=None)
def relator_theta_comm(m: int, n: int) -> Relator:
    if m < 1 or n < 1:
        raise ValueError("Theta indices must be >= 1")
    return Relator(commutator(th(m), th(n)), Family.THETA_COMM, (m, n))


def _series_relator(a: int, b: int, left, right) -> AlgElem:
    # coefficient of z^-a w^-b in chi_1(z,w) X(z)Y(w) - chi_-1(z,w) Y(w)X(z)
    out = AlgElem.zero()
    for j in range(4):
        sign = (-1) ** j
        x = left(a + 3 - j)
        y = right(b + j)
        out = out + (x * y).scale(elem_sym_signed(j, 1) * sign)
        out = out - (y * x).scale(elem_sym_signed(j, -1) * sign)
    return out


@lru_cache(maxsize=None)
def relator_quad(a: int, b: int) -> Relator:
    """Coefficient of z^-a w^-b in chi_1 T1(z)T1(w) - chi_-1 T1(w)T1(z)."""
    return Relator(_series_relator(a, b, u, u), Family.QUAD_TT, (a, b))


@lru_cache(maxsize=None)
def relator_mixed(a: int, b: int) -> Relator:
    """Coefficient of z^-a w^-b in chi_1 T0+(z)T1(w) - chi_-1 T1(w)T0+(z)."""
    return Relator(_series_relator(a, b, th, u), Family.MIXED, (a, b))


def cubic_kernel(m: int) -> LaurentPoly:
    """(zyw)^m (z+w)(y^2 - zw) in variables (z, y, w)."""
    z = LaurentPoly.gen(0, 3)
    y = LaurentPoly.gen(1, 3)
    w = LaurentPoly.gen(2, 3)
    return LaurentPoly.monomial((m, m, m)) * (z + w) * (y * y - z * w)


def residue_t1_cubed(kernel: LaurentPoly) -> AlgElem:
    """Res_{z,y,w} kernel(z,y,w) T1(z)T1(y)T1(w), i.e. the z^-1 y^-1 w^-1 coefficient."""
    out: Dict[Word, int] = {}
    for (i, j, k), c in kernel.terms.items():
        word = (U(i + 1), U(j + 1), U(k + 1))
        out[word] = out.get(word, 0) + c
    return AlgElem(out)


@lru_cache(maxsize=None)
def relator_cubic(m: int) -> Relator:
    return Relator(residue_t1_cubed(cubic_kernel(m)), Family.CUBIC, (m,))


def nested(a: int, b: int, c: int) -> AlgElem:
    """[[u[1,a], u[1,b]], u[1,c]]."""
    return commutator(commutator(u(a), u(b)), u(c))


@lru_cache(maxsize=None)
def relator_R(m: int, n: int, l: int) -> Relator:
    """Sum over the six orderings of (m,n,l) of [[u[1,-1+m], u[1,1+n]], u[1,l]]."""
    out = AlgElem.zero()
    for a, b, c in permutations((m, n, l)):
        out = out + nested(-1 + a, 1 + b, c)
    return Relator(out, Family.R_SYM, tuple(sorted((m, n, l))))


# ---------------------------------------------------------------------------
# enumeration

def enumerate_relators(w: Window, families: Iterable[Family] = DEFINING_FAMILIES) -> List[Relator]:
    """Nonzero relators of the given families whose every word lies in ``w``.

    Duplicates are skipped: the Theta commutator is antisymmetric and
    relator_quad(a, b) == relator_quad(b, a).
    """
    return list(_enumerate_relators(w, tuple(sorted(set(Family(f) for f in families)))))


@lru_cache(maxsize=256)
def _enumerate_relators(w: Window, families: Tuple[Family, ...]) -> Tuple[Relator, ...]:
    cands: List[Relator] = []
    if Family.THETA_COMM in families:
        for m in range(1, w.th_max + 1):
            for n in range(m + 1, w.th_max + 1):
                cands.append(relator_theta_comm(m, n))
    if Family.QUAD_TT in families and w.n_max >= 2:
        for a in range(w.u_min, w.u_max - 2):
            for b in range(a, w.u_max - 2):
                cands.append(relator_quad(a, b))
    if Family.MIXED in families and w.n_max >= 1:
        for a in range(-2, w.th_max - 2):
            for b in range(w.u_min, w.u_max + 1):
                cands.append(relator_mixed(a, b))
    if Family.CUBIC in families and w.n_max >= 3:
        for m in range(w.u_min - 1, w.u_max - 2):
            cands.append(relator_cubic(m))
    if Family.R_SYM in families and w.n_max >= 3:
        lo, hi = w.u_min + 1, w.u_max - 1
        for m in range(lo, hi + 1):
            for n in range(m, hi + 1):
                for l in range(n, hi + 1):
                    cands.append(relator_R(m, n, l))
    out = [r for r in cands if r.elem and w.contains_elem(r.elem)]
    out.sort(key=lambda r: r.sort_key)
    return tuple(out)


# ---------------------------------------------------------------------------
# windowed quotient components

Translate = Tuple[Word, Relator, Word]


def translate_elem(t: Translate) -> AlgElem:
    wl, rel, wr = t
    return AlgElem({wl + v + wr: c for v, c in rel.elem.terms.items()})


@lru_cache(maxsize=4096)
def _relator_mod(rel: Relator, a: EvalAssign) -> Tuple[Tuple[Word, int], ...]:
    return tuple((w, specialize_int(c, a)) for w, c in rel.elem.items())


def _words_by_level(w: Window, level: int, deg_lo: int, deg_hi: int, budget: int) -> List[Word]:
    out = []
    for d in range(deg_lo, deg_hi + 1):
        out.extend(x for x in component_words((level, d), w) if theta_weight(x) <= budget)
    return out


def component_translates(b, w: Window, families: Iterable[Family] = DEFINING_FAMILIES) -> List[Translate]:
    """In-window two-sided translates wl * rel * wr of bidegree ``b``, deterministic order."""
    return list(_component_translates(Bidegree(*b), w, tuple(sorted(set(families)))))


@lru_cache(maxsize=1024)
def _component_translates(b: Bidegree, w: Window, families) -> Tuple[Translate, ...]:
    words = set(component_words(b, w))
    if not words:
        return ()
    max_tw = max(theta_weight(x) for x in words)
    out: List[Translate] = []
    for rel in _enumerate_relators(w, families):
        br = rel.bidegree
        dn, dd = b.n - br.n, b.d - br.d
        if dn < 0:
            continue
        budget = max_tw - min(theta_weight(x) for x in rel.elem.terms)
        if budget < 0:
            continue
        rel_words = list(rel.elem.terms)
        for nl in range(dn + 1):
            nr = dn - nl
            lefts = _words_by_level(w, nl, nl * w.u_min, nl * w.u_max + budget, budget)
            for wl in lefts:
                dl = bidegree(wl).d
                for wr in component_words((nr, dd - dl), w):
                    if all((wl + v + wr) in words for v in rel_words):
                        out.append((wl, rel, wr))
    return tuple(out)


class QuotientComponent:
    """One bidegree component of the windowed quotient, specialized mod p."""

    def __init__(self, b, w: Window, a: EvalAssign,
                 families: Iterable[Family] = DEFINING_FAMILIES, track: bool = False):
        self.bidegree = Bidegree(*b)
        self.window = w
        self.assign = a
        self.families = tuple(sorted(set(families)))
        self.words = component_words(self.bidegree, w)
        self.index = {x: i for i, x in enumerate(self.words)}
        # sparse relators first: mostly pivot-disjoint, keeps fill-in down
        self.translates = sorted(component_translates(self.bidegree, w, self.families),
                                 key=lambda t: len(t[1].elem.terms))
        self.echelon = SparseEchelon(a.p, track=track)
        for t in self.translates:
            self.echelon.add(self.translate_row(t))

    def translate_row(self, t: Translate) -> Dict[int, int]:
        wl, rel, wr = t
        return {self.index[wl + v + wr]: c for v, c in _relator_mod(rel, self.assign)}

    def elem_row(self, x: AlgElem) -> Dict[int, int]:
        row = {}
        for w, c in x.terms.items():
            i = self.index.get(w)
            if i is None:
                raise ValueError(f"word {word_text(w)} is not an in-window word of bidegree {tuple(self.bidegree)}")
            row[i] = specialize_int(c, self.assign)
        return row

    @property
    def relator_rank(self) -> int:
        return self.echelon.rank

    @property
    def quotient_rank(self) -> int:
        return len(self.words) - self.echelon.rank

    def normal_form(self, row: Dict[int, int]) -> Tuple[Dict[int, int], Dict[int, int]]:
        return self.echelon.reduce(row)


@lru_cache(maxsize=64)
def quotient_component(b: Bidegree, w: Window, a: EvalAssign, families=DEFINING_FAMILIES,
                       track: bool = False) -> QuotientComponent:
    return QuotientComponent(b, w, a, families, track)


# ---------------------------------------------------------------------------
# ranks

@dataclass
class RankReport:
    bidegree: Bidegree
    window: Window
    prime: int
    seed: Optional[int]
    n_words: int
    n_relators: int
    relator_rank: int
    quotient_rank: int
    elapsed: float = field(default=0.0, compare=False)
    mode: str = "modular"

    def payload(self) -> dict:
        return {
            "bidegree": list(self.bidegree),
            "window": self.window.as_dict(),
            "prime": self.prime,
            "seed": self.seed,
            "mode": self.mode,
            "n_words": self.n_words,
            "n_relators": self.n_relators,
            "relator_rank": self.relator_rank,
            "quotient_rank": self.quotient_rank,
        }


def _redraw(a: EvalAssign, attempt: int) -> EvalAssign:
    return EvalAssign.random(a.p, random.Random(f"{a.p}:{a.q1}:{a.q2}:retry{attempt}"), len(a.x))


def rank_quotient(b, w: Window, a: EvalAssign, families: Iterable[Family] = DEFINING_FAMILIES,
                  seed: Optional[int] = None, mode: str = "modular") -> RankReport:
    """Rank of the in-window relator translates in bidegree ``b`` and the resulting quotient rank."""
    b = Bidegree(*b)
    if a.is_degenerate():
        raise ValueError("degenerate parameter point; pick another assignment")
    t0 = time.perf_counter()
    families = tuple(sorted(set(families)))
    if mode == "exact":
        words = component_words(b, w)
        if len(words) > EXACT_MAX_WORDS:
            raise ValueError(f"exact mode is limited to {EXACT_MAX_WORDS} words, component has {len(words)}")
        trans = component_translates(b, w, families)
        ech = _ExactEchelon(words)
        for t in trans:
            ech.add(translate_elem(t))
        r = ech.rank
        return RankReport(b, w, a.p, seed, len(words), len(trans), r, len(words) - r,
                          time.perf_counter() - t0, mode="exact")
    last: Optional[Exception] = None
    for attempt in range(MAX_RETRIES):
        try:
            qc = QuotientComponent(b, w, a, families)
        except BadPointError as exc:
            last = exc
            a = _redraw(a, attempt)
            continue
        return RankReport(b, w, a.p, seed, len(qc.words), len(qc.translates), qc.relator_rank,
                          qc.quotient_rank, time.perf_counter() - t0)
    raise BadPointError(f"gave up after {MAX_RETRIES} bad evaluation points") from last


# ---------------------------------------------------------------------------
# exact elimination for small components

class _ExactEchelon:
    def __init__(self, words: Sequence[Word]):
        self.index = {x: i for i, x in enumerate(words)}
        self.pivots: Dict[int, Tuple[Dict[int, Scalar], Dict[int, Scalar]]] = {}
        self.n = 0

    @property
    def rank(self):
        return len(self.pivots)

    def _row(self, x: AlgElem) -> Dict[int, Scalar]:
        return {self.index[w]: c for w, c in x.terms.items()}

    @staticmethod
    def _axpy(row, f, other):
        for k, v in other.items():
            x = row.get(k, ZERO) - f * v
            if x:
                row[k] = x
            else:
                row.pop(k, None)

    def reduce(self, row: Dict[int, Scalar], hist: Dict[int, Scalar]):
        changed = True
        while changed and row:
            changed = False
            for c in sorted(row, reverse=True):
                piv = self.pivots.get(c)
                if piv is not None and c in row:
                    f = row[c]
                    self._axpy(row, f, piv[0])
                    self._axpy(hist, f, piv[1])
                    changed = True
                    break
        return row, hist

    def add(self, x: AlgElem) -> bool:
        row, hist = self.reduce(self._row(x), {self.n: ONE})
        self.n += 1
        if not row:
            return False
        c = max(row)
        inv = row[c].inverse()
        self.pivots[c] = ({k: v * inv for k, v in row.items()}, {k: v * inv for k, v in hist.items()})
        return True


# ---------------------------------------------------------------------------
# membership certificates

class _NotInWindowedSpan:
    """Window-relative negative answer; says nothing about the full ideal."""

    def __repr__(self):
        return "NOT_IN_WINDOWED_SPAN"

    def __bool__(self):
        return False


NOT_IN_WINDOWED_SPAN = _NotInWindowedSpan()


@dataclass
class CertTerm:
    coeff: Union[Scalar, FFElem]
    left: Word
    relator: Relator
    right: Word

    def as_record(self) -> dict:
        c = self.coeff.text() if isinstance(self.coeff, Scalar) else self.coeff.value
        return {"coeff": c, "left": word_text(self.left), "relator": self.relator.id,
                "right": word_text(self.right)}


@dataclass
class Certificate:
    """target == sum(coeff * left * relator * right), over Q(q1,q2) or over F_p."""

    target: AlgElem
    combination: List[CertTerm]
    modulus: Optional[EvalAssign]
    window: Window
    cross_checks: List[dict] = field(default_factory=list)

    def verify(self) -> bool:
        if self.modulus is None:
            total = AlgElem.zero()
            for t in self.combination:
                total = total + translate_elem((t.left, t.relator, t.right)).scale(t.coeff)
            return total == self.target
        return _verify_mod(self.target, self.combination, self.modulus)

    @property
    def relators_used(self) -> List[str]:
        return sorted({t.relator.id for t in self.combination})

    def as_record(self) -> dict:
        return {
            "field": "exact" if self.modulus is None else f"F_{self.modulus.p}",
            "q": None if self.modulus is None else [self.modulus.q1, self.modulus.q2],
            "n_terms": len(self.combination),
            "relators": self.relators_used,
            "cross_checks": self.cross_checks,
        }


def _verify_mod(target: AlgElem, combo: Sequence[CertTerm], a: EvalAssign) -> bool:
    p = a.p
    acc: Dict[Word, int] = {}
    for t in combo:
        c = t.coeff.value if isinstance(t.coeff, FFElem) else specialize_int(t.coeff, a)
        for v, rc in _relator_mod(t.relator, a):
            w = t.left + v + t.right
            acc[w] = (acc.get(w, 0) + c * rc) % p
    for w, c in target.terms.items():
        acc[w] = (acc.get(w, 0) - specialize_int(c, a)) % p
    return not any(acc.values())


def _check_target(x: AlgElem, w: Window) -> Bidegree:
    if not x:
        raise ValueError("membership target is zero")
    if not x.is_homogeneous():
        raise ValueError("membership target must be homogeneous")
    if not w.contains_elem(x):
        raise ValueError("membership target has out-of-window words")
    return x.bidegree


def _modular_certificate(x: AlgElem, b: Bidegree, w: Window, a: EvalAssign, families) -> Optional[List[CertTerm]]:
    qc = quotient_component(b, w, a, families, track=True)
    rem, comb = qc.normal_form(qc.elem_row(x))
    if rem:
        return None
    return [CertTerm(FFElem(c, a.p), *qc.translates[i]) for i, c in sorted(comb.items())]


def membership(x: AlgElem, w: Window, a: EvalAssign, families: Iterable[Family] = DEFINING_FAMILIES,
               mode: str = "auto", extra_primes: Sequence[int] = (2147483629,),
               seed: int = 0) -> Union[Certificate, _NotInWindowedSpan]:
    """Express ``x`` as a combination of in-window relator translates.

    Modular certificates are recomputed and re-verified at one further
    parameter point per entry of ``extra_primes``.
    """
    b = _check_target(x, w)
    families = tuple(sorted(set(families)))
    if mode not in ("auto", "exact", "modular"):
        raise ValueError(f"unknown mode {mode!r}")
    words = component_words(b, w)
    if mode == "exact" or (mode == "auto" and len(words) <= EXACT_MAX_WORDS):
        if len(words) > EXACT_MAX_WORDS:
            raise ValueError(f"exact mode is limited to {EXACT_MAX_WORDS} words")
        trans = component_translates(b, w, families)
        ech = _ExactEchelon(words)
        for t in trans:
            ech.add(translate_elem(t))
        rem, hist = ech.reduce(ech._row(x), {})
        if rem:
            return NOT_IN_WINDOWED_SPAN
        # reduce() tracks x - remainder as the negated combination
        combo = [CertTerm(-c, *trans[i]) for i, c in sorted(hist.items()) if c]
        cert = Certificate(x, combo, None, w)
        if not cert.verify():
            raise RuntimeError("exact certificate failed to recombine")
        return cert
    combo = _modular_certificate(x, b, w, a, families)
    if combo is None:
        return NOT_IN_WINDOWED_SPAN
    cert = Certificate(x, combo, a, w)
    if not cert.verify():
        raise RuntimeError("modular certificate failed to recombine")
    for p in extra_primes:
        a2 = EvalAssign.from_seed(p, seed)
        combo2 = _modular_certificate(x, b, w, a2, families)
        ok = combo2 is not None and _verify_mod(x, combo2, a2)
        cert.cross_checks.append({"prime": p, "q": [a2.q1, a2.q2], "verified": ok,
                                  "n_terms": None if combo2 is None else len(combo2)})
    return cert


def membership_deepening(x: AlgElem, w: Window, a: EvalAssign, tw_max: int,
                         families: Iterable[Family] = DEFINING_FAMILIES, **kw
                         ) -> Union[Certificate, _NotInWindowedSpan]:
    """Search growing sub-windows of ``w`` for a certificate.

    Θ-index bound th = 1..w.th_max (outer) and theta_weight_max = 0..tw_max
    (inner); the first success is returned, so ``cert.window`` is the first
    window in that order that worked.
    """
    for th_max in range(min(1, w.th_max), w.th_max + 1):
        for tw in range(tw_max + 1):
            if th_max > 1 and tw < th_max:
                continue  # Th[th_max] does not fit, same as the previous window
            sub = Window(w.n_max, w.u_min, w.u_max, th_max, tw)
            if not sub.contains_elem(x):
                continue
            cert = membership(x, sub, a, families, **kw)
            if cert:
                return cert
    return NOT_IN_WINDOWED_SPAN


# ---------------------------------------------------------------------------
# ker(f (x) f) = V (x) ker f + ker f (x) V

def random_surjection(n: int, m: int, p: int, rng: random.Random) -> List[List[int]]:
    """Random m x n matrix of rank m over F_p (a surjection F_p^n -> F_p^m)."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    while True:
        f = [[rng.randrange(p) for _ in range(n)] for _ in range(m)]
        if rank_mod(f, p) == m:
            return f


def kernel_tensor_check(f: Sequence[Sequence[int]], trials: int = 10, p: int = 2147483647,
                        rng: Optional[random.Random] = None) -> bool:
    """Check ker(f (x) f) == V (x) K + K (x) V with K = ker f, for surjective f.

    Compares dimensions, checks that the right side is killed by f (x) f, and
    tests ``trials`` random kernel vectors for membership in the right side.
    """
    m = len(f)
    n = len(f[0]) if m else 0
    if m == 0 or n == 0:
        raise ValueError("empty matrix")
    if rank_mod(f, p) != m:
        raise ValueError("f must be surjective (full row rank)")
    rng = rng or random.Random(0)
    K = nullspace_mod(f, p, n)
    ff = kron_mod(f, f, p)
    ker_ff = nullspace_mod(ff, p, n * n)
    span = []
    for i in range(n):
        e = [int(j == i) for j in range(n)]
        for k in K:
            span.append([x * y % p for x in e for y in k])
            span.append([x * y % p for x in k for y in e])
    r = rank_mod(span, p) if span else 0
    if r != len(ker_ff):
        return False
    if any(any(matvec_mod(ff, s, p)) for s in span):
        return False
    for _ in range(trials):
        if not ker_ff:
            break
        coeffs = [rng.randrange(p) for _ in ker_ff]
        v = [sum(c * b[j] for c, b in zip(coeffs, ker_ff)) % p for j in range(n * n)]
        if any(matvec_mod(ff, v, p)):
            return False
        if rank_mod(span + [v], p) != r:
            return False
    return True
