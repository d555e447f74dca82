"""The Z^2-graded free algebra on u[1,d] (d in Z) and Th[0,k] (k >= 1).

Series conventions: T1(z) = sum_d u[1,d] z^-d and T0+(z) = sum_{k>=0} Th[0,k] z^-k
with Th[0,0] = 1.  Words are tuples of ``Gen``; ``Gen`` is a plain tuple so
words compare as (level, index) sequences, level 0 before level 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Tuple

from .coeff import ONE, Scalar, ZERO, alpha


class Gen(NamedTuple):
    level: int
    index: int

    def text(self) -> str:
        return f"u1[{self.index}]" if self.level else f"th[{self.index}]"


Word = Tuple[Gen, ...]
EMPTY: Word = ()


def U(d: int) -> Gen:
    return Gen(1, d)


def TH(k: int) -> Gen:
    if k < 1:
        raise ValueError(f"Th[0,k] needs k >= 1, got {k}")
    return Gen(0, k)


class Bidegree(NamedTuple):
    n: int
    d: int

    def __add__(self, other):
        return Bidegree(self.n + other[0], self.d + other[1])

    def __sub__(self, other):
        return Bidegree(self.n - other[0], self.d - other[1])


def bidegree(word: Word) -> Bidegree:
    n = 0
    d = 0
    for g in word:
        n += g.level
        d += g.index
    return Bidegree(n, d)


def theta_weight(word: Word) -> int:
    return sum(g.index for g in word if not g.level)


def word_key(word: Word):
    """Deterministic word order: by length, then letters (level 0 < level 1, then index)."""
    return (len(word), word)


def word_text(word: Word) -> str:
    return " ".join(g.text() for g in word) if word else "1"


def parse_word(s: str) -> Word:
    s = s.strip()
    if s in ("", "1"):
        return EMPTY
    out = []
    for tok in s.split():
        if tok.startswith("u1[") and tok.endswith("]"):
            out.append(U(int(tok[3:-1])))
        elif tok.startswith("th[") and tok.endswith("]"):
            out.append(TH(int(tok[3:-1])))
        else:
            raise ValueError(f"bad letter {tok!r}")
    return tuple(out)


class AlgElem:
    """Finite linear combination of words over Scalar.  Treat as immutable."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Word, object]] = None):
        out: Dict[Word, Scalar] = {}
        if terms:
            for w, c in terms.items():
                c = Scalar.of(c)
                if c:
                    out[tuple(w)] = c
        self.terms = out

    @classmethod
    def _raw(cls, terms: Dict[Word, Scalar]) -> "AlgElem":
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def word(cls, w: Iterable[Gen], c=ONE) -> "AlgElem":
        return cls({tuple(w): c})

    @classmethod
    def one(cls) -> "AlgElem":
        return cls._raw({EMPTY: ONE})

    @classmethod
    def zero(cls) -> "AlgElem":
        return cls._raw({})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[Tuple[Word, Scalar]]:
        return iter(self.items())

    def items(self) -> List[Tuple[Word, Scalar]]:
        return sorted(self.terms.items(), key=lambda t: word_key(t[0]))

    def words(self) -> List[Word]:
        return sorted(self.terms, key=word_key)

    def coeff(self, w: Word) -> Scalar:
        return self.terms.get(tuple(w), ZERO)

    def __eq__(self, other):
        if isinstance(other, int) and other == 0:
            return not self.terms
        if not isinstance(other, AlgElem):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "AlgElem") -> "AlgElem":
        out = dict(self.terms)
        for w, c in other.terms.items():
            v = out.get(w)
            v = c if v is None else v + c
            if v:
                out[w] = v
            else:
                out.pop(w, None)
        return AlgElem._raw(out)

    def __neg__(self) -> "AlgElem":
        return AlgElem._raw({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "AlgElem") -> "AlgElem":
        return self + (-other)

    def scale(self, s) -> "AlgElem":
        s = Scalar.of(s)
        if not s:
            return AlgElem.zero()
        return AlgElem._raw({w: c * s for w, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, AlgElem):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def bidegrees(self) -> List[Bidegree]:
        return sorted({bidegree(w) for w in self.terms})

    def is_homogeneous(self) -> bool:
        return len({bidegree(w) for w in self.terms}) <= 1

    @property
    def bidegree(self) -> Bidegree:
        bs = self.bidegrees()
        if len(bs) != 1:
            raise ValueError("element is not homogeneous (or is zero)")
        return bs[0]

    def serialize(self) -> List[Tuple[str, str]]:
        return [(c.text(), word_text(w)) for w, c in self.items()]

    @classmethod
    def deserialize(cls, pairs: Iterable[Tuple[str, str]]) -> "AlgElem":
        out = AlgElem.zero()
        for c, w in pairs:
            out = out + AlgElem.word(parse_word(w), Scalar.parse(c))
        return out

    def __repr__(self):
        if not self.terms:
            return "AlgElem(0)"
        return "AlgElem(" + " + ".join(f"[{c.text()}] {word_text(w)}" for w, c in self.items()) + ")"


def gen(g: Gen) -> AlgElem:
    return AlgElem._raw({(g,): ONE})


def u(d: int) -> AlgElem:
    return gen(U(d))


def th(k: int) -> AlgElem:
    """Th[0,k] as an element; Th[0,0] is the unit and negative indices vanish."""
    if k < 0:
        return AlgElem.zero()
    if k == 0:
        return AlgElem.one()
    return gen(TH(k))


def mul(x: AlgElem, y: AlgElem) -> AlgElem:
    out: Dict[Word, Scalar] = {}
    for w1, c1 in x.terms.items():
        for w2, c2 in y.terms.items():
            w = w1 + w2
            c = c1 * c2
            v = out.get(w)
            out[w] = c if v is None else v + c
    return AlgElem._raw({w: c for w, c in out.items() if c})


def commutator(x: AlgElem, y: AlgElem) -> AlgElem:
    return mul(x, y) - mul(y, x)


def project(x: AlgElem, b) -> AlgElem:
    b = Bidegree(*b)
    return AlgElem._raw({w: c for w, c in x.terms.items() if bidegree(w) == b})


# ---------------------------------------------------------------------------
# u[0,k] and the adjoint action

@lru_cache(maxsize=None)
def _log_theta(k: int) -> Dict[Tuple[int, ...], Fraction]:
    """k-th coefficient of log(1 + sum_{i>=1} Th_i t^i) with commuting Th's.

    Uses k L_k = k Th_k - sum_{i<k} i L_i Th_{k-i}.
    """
    out: Dict[Tuple[int, ...], Fraction] = {(k,): Fraction(1)}
    for i in range(1, k):
        for mono, c in _log_theta(i).items():
            m = tuple(sorted(mono + (k - i,)))
            out[m] = out.get(m, Fraction(0)) - Fraction(i, k) * c
    return {m: c for m, c in out.items() if c}


def u0_as_theta(k: int) -> AlgElem:
    """u[0,k] inside the Theta subalgebra, from T0+(z) = exp(sum_k u[0,k] z^-k).

    Monomials are written with nondecreasing Theta indices.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"u0_as_theta needs k >= 1, got {k!r}")
    return AlgElem({tuple(TH(i) for i in mono): Scalar(c.numerator, c.denominator)
                    for mono, c in _log_theta(k).items()})


def ad_u0(k: int, x: AlgElem) -> AlgElem:
    """Derivation with u[1,l] -> alpha_k u[1,l+k] and Th[0,m] -> 0."""
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"ad_u0 needs k >= 1, got {k!r}")
    out: Dict[Word, Scalar] = {}
    for w, c in x.terms.items():
        for i, g in enumerate(w):
            if g.level:
                nw = w[:i] + (Gen(1, g.index + k),) + w[i + 1:]
                v = out.get(nw)
                out[nw] = c if v is None else v + c
    return AlgElem._raw({w: c for w, c in out.items() if c}).scale(alpha(k))


# ---------------------------------------------------------------------------
# windows

@dataclass(frozen=True)
class Window:
    """Truncation box: level <= n_max, u-indices in [u_min, u_max], Theta indices <= th_max.

    ``theta_weight_max`` optionally bounds the total Theta index of a word.
    """

    n_max: int
    u_min: int
    u_max: int
    th_max: int
    theta_weight_max: Optional[int] = None

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.u_min > self.u_max:
            raise ValueError("u_min must be <= u_max")
        if self.th_max < 0:
            raise ValueError("th_max must be >= 0")
        if self.theta_weight_max is not None and self.theta_weight_max < 0:
            raise ValueError("theta_weight_max must be >= 0")

    def contains(self, word: Word) -> bool:
        n = 0
        tw = 0
        for g in word:
            if g.level:
                if not self.u_min <= g.index <= self.u_max:
                    return False
                n += 1
            else:
                if g.index > self.th_max:
                    return False
                tw += g.index
        if n > self.n_max:
            return False
        return self.theta_weight_max is None or tw <= self.theta_weight_max

    def contains_elem(self, x: AlgElem) -> bool:
        return all(self.contains(w) for w in x.terms)

    def with_theta_weight(self, tw: Optional[int]) -> "Window":
        return Window(self.n_max, self.u_min, self.u_max, self.th_max, tw)

    def text(self) -> str:
        s = f"n={self.n_max},u={self.u_min}..{self.u_max},th={self.th_max}"
        if self.theta_weight_max is not None:
            s += f",tw={self.theta_weight_max}"
        return s

    def as_dict(self) -> dict:
        return {"n_max": self.n_max, "u_min": self.u_min, "u_max": self.u_max,
                "th_max": self.th_max, "theta_weight_max": self.theta_weight_max}


@lru_cache(maxsize=None)
def theta_compositions(weight: int, th_max: int) -> Tuple[Tuple[int, ...], ...]:
    if weight == 0:
        return ((),)
    out = []
    for first in range(1, min(th_max, weight) + 1):
        for rest in theta_compositions(weight - first, th_max):
            out.append((first,) + rest)
    return tuple(out)


def _split_into_slots(parts: Tuple[int, ...], nslots: int) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    if nslots == 1:
        yield (parts,)
        return
    for cut in range(len(parts) + 1):
        for rest in _split_into_slots(parts[cut:], nslots - 1):
            yield (parts[:cut],) + rest


@lru_cache(maxsize=4096)
def _component_words(n: int, d: int, w: Window) -> Tuple[Word, ...]:
    if n < 0 or n > w.n_max:
        return ()
    wmax = d - n * w.u_min
    if w.theta_weight_max is not None:
        wmax = min(wmax, w.theta_weight_max)
    if wmax < 0:
        return ()
    if w.th_max == 0:
        wmax = 0
    out = []
    for us in product(range(w.u_min, w.u_max + 1), repeat=n):
        weight = d - sum(us)
        if not 0 <= weight <= wmax:
            continue
        for comp in theta_compositions(weight, max(w.th_max, 1)):
            for slots in _split_into_slots(comp, n + 1):
                word: List[Gen] = []
                for i, slot in enumerate(slots):
                    word.extend(Gen(0, k) for k in slot)
                    if i < n:
                        word.append(Gen(1, us[i]))
                out.append(tuple(word))
    out.sort(key=word_key)
    return tuple(out)


def component_words(b, w: Window) -> List[Word]:
    """All in-window words of bidegree ``b``, in the deterministic word order."""
    b = Bidegree(*b)
    return list(_component_words(b.n, b.d, w))
