"""The coproduct on the free algebra, windowed tensor components, and the checks.

Tensor components are keyed by the pair of leg bidegrees.  ``delta`` keeps a
component only when every term of the full (untruncated) component has both
legs in the window; partially visible components go to ``dropped``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .coeff import EvalAssign, Scalar, specialize_int
from .freealg import (EMPTY, AlgElem, Bidegree, Gen, Window, Word, bidegree, commutator, theta_weight, u,
                      word_key, word_text)
from .relations import DEFINING_FAMILIES, Relator, quotient_component
from .shuffle import EvalPointSet, evaluate_on_vacuum

Pair = Tuple[Word, Word]
CompKey = Tuple[Bidegree, Bidegree]


def _key(pair: Pair) -> CompKey:
    return bidegree(pair[0]), bidegree(pair[1])


class TensorElem:
    """Finite sum of w1 (x) w2 with Scalar coefficients.

    ``dropped`` lists component keys known to be incomplete because of the
    window; products propagate them.
    """

    __slots__ = ("terms", "window", "dropped")

    def __init__(self, terms: Optional[Dict[Pair, Scalar]] = None, window: Optional[Window] = None,
                 dropped: Iterable[CompKey] = ()):
        self.terms = {k: c for k, c in (terms or {}).items() if c}
        self.window = window
        self.dropped: FrozenSet[CompKey] = frozenset(dropped)

    @classmethod
    def simple(cls, x: AlgElem, y: AlgElem) -> "TensorElem":
        """x (x) y."""
        return cls({(w1, w2): c1 * c2 for w1, c1 in x.terms.items() for w2, c2 in y.terms.items()})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, TensorElem):
            return NotImplemented
        return self.terms == other.terms

    def __add__(self, other: "TensorElem") -> "TensorElem":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return TensorElem(out, self.window or other.window, self.dropped | other.dropped)

    def __neg__(self):
        return TensorElem({k: -c for k, c in self.terms.items()}, self.window, self.dropped)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "TensorElem":
        s = Scalar.of(s)
        return TensorElem({k: c * s for k, c in self.terms.items()}, self.window, self.dropped)

    def __mul__(self, other: "TensorElem") -> "TensorElem":
        out: Dict[Pair, Scalar] = {}
        for (a1, a2), c in self.terms.items():
            for (b1, b2), d in other.terms.items():
                k = (a1 + b1, a2 + b2)
                out[k] = out[k] + c * d if k in out else c * d
        mine = set(self.components()) | set(self.dropped)
        theirs = set(other.components()) | set(other.dropped)
        dropped = {(x[0] + y[0], x[1] + y[1]) for x in self.dropped for y in theirs}
        dropped |= {(x[0] + y[0], x[1] + y[1]) for x in mine for y in other.dropped}
        return TensorElem(out, self.window or other.window, dropped)

    def components(self) -> List[CompKey]:
        return sorted({_key(k) for k in self.terms})

    def component(self, key: CompKey) -> "TensorElem":
        key = (Bidegree(*key[0]), Bidegree(*key[1]))
        return TensorElem({k: c for k, c in self.terms.items() if _key(k) == key}, self.window)

    def restrict(self, keep) -> "TensorElem":
        """Terms whose component key satisfies ``keep(key)``."""
        return TensorElem({k: c for k, c in self.terms.items() if keep(_key(k))}, self.window,
                          {d for d in self.dropped if keep(d)})

    def items(self) -> List[Tuple[Pair, Scalar]]:
        return sorted(self.terms.items(), key=lambda t: (word_key(t[0][0]), word_key(t[0][1])))

    def __repr__(self):
        if not self.terms:
            return "TensorElem(0)"
        return "TensorElem(" + " + ".join(
            f"[{c.text()}] {word_text(a)} (x) {word_text(b)}" for (a, b), c in self.items()) + ")"


# ---------------------------------------------------------------------------
# delta

def _letter_choices(g: Gen) -> Iterator[Tuple[Tuple[Gen, ...], Tuple[Gen, ...], int]]:
    """Finite part of the expansion of one letter: (left, right, free k-slots) templates.

    u[1,d] gives u[1,d] (x) 1 and, through a free k >= 0, Th[k] (x) u[1,d-k];
    that second case is marked by the returned flag 1.
    """
    if g.level:
        yield (g,), (), 0
        yield (), (), 1
    else:
        for i in range(g.index + 1):
            left = (Gen(0, i),) if i else ()
            right = (Gen(0, g.index - i),) if g.index - i else ()
            yield left, right, 0


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 0:
            yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _delta_word_component(word: Word, left_b: Bidegree) -> Dict[Pair, int]:
    """Full (untruncated) component of delta(word) whose left leg has bidegree ``left_b``.

    Coefficients are integers (delta has coefficient 1 on every expansion term).
    """
    out: Dict[Pair, int] = {}
    choices = [list(_letter_choices(g)) for g in word]
    for pick in product(*choices):
        n_left = sum(1 for (l, _, _) in pick for g in l if g.level)
        if n_left != left_b.n:
            continue
        fixed = sum(g.index for (l, _, _) in pick for g in l)
        slots = [i for i, (_, _, free) in enumerate(pick) if free]
        budget = left_b.d - fixed
        for ks in _compositions(budget, len(slots)) if budget >= 0 else ():
            kmap = dict(zip(slots, ks))
            left: List[Gen] = []
            right: List[Gen] = []
            for i, (l, r, free) in enumerate(pick):
                if free:
                    k = kmap[i]
                    if k:
                        left.append(Gen(0, k))
                    right.append(Gen(1, word[i].index - k))
                else:
                    left.extend(l)
                    right.extend(r)
            key = (tuple(left), tuple(right))
            out[key] = out.get(key, 0) + 1
    return out


def _truncated_left_bidegrees(word: Word, w: Window) -> List[Bidegree]:
    """Left-leg bidegrees reached by at least one in-window expansion term."""
    found = set()
    choices = []
    for g in word:
        if g.level:
            opts = [(1, g.index)] + [(0, k) for k in range(0, w.th_max + 1)
                                     if w.u_min <= g.index - k <= w.u_max]
            if not w.u_min <= g.index <= w.u_max:
                opts = opts[1:]
        else:
            opts = [(0, i) for i in range(g.index + 1)]
        choices.append(opts)
    for pick in product(*choices):
        found.add(Bidegree(sum(a for a, _ in pick), sum(b for _, b in pick)))
    return sorted(found)


def delta(x: AlgElem, w: Window) -> TensorElem:
    """Coproduct of ``x`` restricted to components lying wholly inside ``w`` on both legs."""
    if not w.contains_elem(x):
        raise ValueError("delta: input has out-of-window words")
    keys = set()
    for word in x.terms:
        b = bidegree(word)
        keys.update((lb, b - lb) for lb in _truncated_left_bidegrees(word, w))
    terms: Dict[Pair, Scalar] = {}
    bad = set()
    for key in sorted(keys):
        acc: Dict[Pair, Scalar] = {}
        for word, c in x.terms.items():
            if bidegree(word) != key[0] + key[1]:
                continue
            # every word counts, also those with no in-window term here
            full = _delta_word_component(word, key[0])
            if not all(w.contains(a) and w.contains(r) for a, r in full):
                bad.add(key)
                break
            for pair, m in full.items():
                acc[pair] = acc[pair] + c * m if pair in acc else c * m
        else:
            terms.update(acc)
    return TensorElem(terms, w, bad)


def counit(x: AlgElem) -> Scalar:
    """Projection to bidegree (0,0): the coefficient of the empty word."""
    return x.coeff(EMPTY)


def counit_left(t: TensorElem) -> AlgElem:
    """(counit (x) id)(t)."""
    return AlgElem({b: c for (a, b), c in t.terms.items() if a == EMPTY})


def counit_right(t: TensorElem) -> AlgElem:
    """(id (x) counit)(t)."""
    return AlgElem({a: c for (a, b), c in t.terms.items() if b == EMPTY})


def delta_left(t: TensorElem, w: Window) -> Dict[Tuple[Word, Word, Word], Scalar]:
    """(delta (x) id)(t) as a three-leg dict (truncated like delta)."""
    out: Dict[Tuple[Word, Word, Word], Scalar] = {}
    for (a, b), c in t.terms.items():
        for (a1, a2), d in delta(AlgElem.word(a), w).terms.items():
            k = (a1, a2, b)
            out[k] = out[k] + c * d if k in out else c * d
    return {k: v for k, v in out.items() if v}


def delta_right(t: TensorElem, w: Window) -> Dict[Tuple[Word, Word, Word], Scalar]:
    """(id (x) delta)(t) as a three-leg dict (truncated like delta)."""
    out: Dict[Tuple[Word, Word, Word], Scalar] = {}
    for (a, b), c in t.terms.items():
        for (b1, b2), d in delta(AlgElem.word(b), w).terms.items():
            k = (a, b1, b2)
            out[k] = out[k] + c * d if k in out else c * d
    return {k: v for k, v in out.items() if v}


# ---------------------------------------------------------------------------
# can (x) can

def tensor_oracle_zero(t: TensorElem, pts: EvalPointSet) -> bool:
    """True iff (can (x) can)(t) vanishes at every point of ``pts``.

    A point's x-values are split: the left leg gets the first n1, the right leg
    the next n2.
    """
    by_key: Dict[CompKey, List[Tuple[Pair, Scalar]]] = {}
    for pair, c in t.terms.items():
        by_key.setdefault(_key(pair), []).append((pair, c))
    for (lb, rb), terms in sorted(by_key.items()):
        if lb.n + rb.n > pts.n_max:
            raise ValueError(f"point set has {pts.n_max} x-values, component needs {lb.n + rb.n}")
        for a in pts.points:
            al = EvalAssign(a.p, a.q1, a.q2, a.x[:lb.n])
            ar = EvalAssign(a.p, a.q1, a.q2, a.x[lb.n:lb.n + rb.n])
            acc = 0
            lcache: Dict[Word, int] = {}
            rcache: Dict[Word, int] = {}
            for (w1, w2), c in terms:
                if w1 not in lcache:
                    lcache[w1] = evaluate_on_vacuum(AlgElem.word(w1), al)
                if w2 not in rcache:
                    rcache[w2] = evaluate_on_vacuum(AlgElem.word(w2), ar)
                acc += specialize_int(c, a) * lcache[w1] * rcache[w2]
            if acc % a.p:
                return False
    return True


# ---------------------------------------------------------------------------
# three-part split of delta([[u-1,u1],u0]) by left level

def _theta_key(word: Word) -> Tuple[int, ...]:
    return tuple(sorted(g.index for g in word))


def term3_formula(max_weight: int) -> Dict[Tuple[Tuple[int, ...], Word], Scalar]:
    """sum_{m,n,l>=0, m+n+l<=max_weight} Th_m Th_n Th_l (x) [[u_{-1-m}, u_{1-n}], u_{-l}],

    with the left leg collected as a sorted tuple of nonzero Θ-indices.
    """
    out: Dict[Tuple[Tuple[int, ...], Word], Scalar] = {}
    for m in range(max_weight + 1):
        for n in range(max_weight + 1 - m):
            for l in range(max_weight + 1 - m - n):
                key = tuple(sorted(i for i in (m, n, l) if i))
                right = commutator(commutator(u(-1 - m), u(1 - n)), u(-l))
                for wr, c in right.terms.items():
                    k = (key, wr)
                    out[k] = out[k] + c if k in out else c
    return {k: v for k, v in out.items() if v}


def collect_theta_left(t: TensorElem, max_weight: Optional[int] = None
                       ) -> Dict[Tuple[Tuple[int, ...], Word], Scalar]:
    """Left legs that are pure Θ-words, collected commutatively."""
    out: Dict[Tuple[Tuple[int, ...], Word], Scalar] = {}
    for (a, b), c in t.terms.items():
        if any(g.level for g in a):
            raise ValueError("left leg is not a Θ-word")
        if max_weight is not None and theta_weight(a) > max_weight:
            continue
        k = (_theta_key(a), b)
        out[k] = out[k] + c if k in out else c
    return {k: v for k, v in out.items() if v}


@dataclass
class Eq1Result:
    r: AlgElem
    term1: TensorElem
    E: TensorElem
    term3: TensorElem
    term1_ok: bool
    term3_ok: bool
    term3_weight: int
    dropped: List[CompKey]

    def payload(self) -> dict:
        return {
            "term1_equals_r_tensor_1": self.term1_ok,
            "term3_matches_formula": self.term3_ok,
            "term3_theta_weight_checked": self.term3_weight,
            "n_terms": {"term1": len(self.term1.terms), "E": len(self.E.terms),
                        "term3": len(self.term3.terms)},
            "E_components": [[list(a), list(b)] for a, b in self.E.components()],
            "dropped_components": [[list(a), list(b)] for a, b in sorted(self.dropped)],
        }


def eq1_decompose(w: Window, term3_weight: int = 4) -> Eq1Result:
    """Split delta(r), r = [[u-1,u1],u0], by left-leg level into term1, E, term3."""
    r = commutator(commutator(u(-1), u(1)), u(0))
    if w.n_max < 3 or not w.contains_elem(r):
        raise ValueError("eq1_decompose: window does not contain [[u-1,u1],u0]")
    need_u = -1 - term3_weight
    if w.th_max < term3_weight or w.u_min > need_u or (
            w.theta_weight_max is not None and w.theta_weight_max < term3_weight):
        raise ValueError(f"eq1_decompose: window too small for Θ-weight {term3_weight} "
                         f"(need th>={term3_weight}, u_min<={need_u})")
    d = delta(r, w)
    term1 = d.restrict(lambda k: k[0].n == 3)
    E = d.restrict(lambda k: k[0].n in (1, 2))
    term3 = d.restrict(lambda k: k[0].n == 0)
    term1_ok = term1 == TensorElem.simple(r, AlgElem.one())
    # every term3 component up to the checked weight must be present
    want = {(Bidegree(0, k), Bidegree(3, -k)) for k in range(term3_weight + 1)}
    missing = want & set(d.dropped)
    if missing:
        raise ValueError(f"eq1_decompose: term3 components {sorted(missing)} are truncated")
    got = collect_theta_left(term3, term3_weight)
    term3_ok = got == term3_formula(term3_weight)
    return Eq1Result(r, term1, E, term3, term1_ok, term3_ok, term3_weight, sorted(d.dropped))


def eq1_oracle_check(res: Eq1Result, primes: Sequence[int], n_points: int = 20, seed: int = 42
                     ) -> Dict[str, object]:
    """(can (x) can) on every E-component at ``n_points`` points per prime."""
    out = {}
    for p in primes:
        pts = EvalPointSet(p, seed, n_points, 3)
        out[str(p)] = all(tensor_oracle_zero(res.E.component(k), pts) for k in res.E.components())
    return out


# ---------------------------------------------------------------------------
# delta respects relators

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass
class CheckReport:
    relator: str
    family: str
    params: Tuple[int, ...]
    status: str
    components: List[dict] = field(default_factory=list)
    dropped: List[CompKey] = field(default_factory=list)
    elapsed: float = field(default=0.0, compare=False)

    def payload(self) -> dict:
        return {
            "relator": self.relator,
            "status": self.status,
            "components": self.components,
            "dropped_components": [[list(a), list(b)] for a, b in self.dropped],
        }


def _leg_window(w: Window, words: Iterable[Word], slack: int) -> Window:
    tw = max((theta_weight(x) for x in words), default=0) + slack
    if w.theta_weight_max is not None:
        tw = min(tw, w.theta_weight_max)
    return w.with_theta_weight(tw)


def tensor_normal_form(t: TensorElem, key: CompKey, w: Window, a: EvalAssign,
                       families=DEFINING_FAMILIES, slack: int = 1) -> Tuple[Dict[Tuple[int, int], int], dict]:
    """Image of one component in Q1 (x) Q2 (windowed quotients mod p) plus a certificate.

    The image is zero iff the component lies in I (x) A + A (x) I within the leg
    windows.  The certificate writes t = sum c * (w1 - NF(w1)) (x) w2
    + sum c * NF(w1) (x) (w2 - NF(w2)) + residual, and is re-verified here by
    recombination mod p.
    """
    lb, rb = key
    comp = t.component(key)
    w1 = _leg_window(w, (x for x, _ in comp.terms), slack)
    w2 = _leg_window(w, (y for _, y in comp.terms), slack)
    q1 = quotient_component(lb, w1, a, families, track=True)
    q2 = quotient_component(rb, w2, a, families, track=True)
    p = a.p
    nf1: Dict[Word, Tuple[dict, dict]] = {}
    nf2: Dict[Word, Tuple[dict, dict]] = {}
    image: Dict[Tuple[int, int], int] = {}
    for (x, y), c in comp.terms.items():
        if x not in nf1:
            nf1[x] = q1.normal_form(q1.elem_row(AlgElem.word(x)))
        if y not in nf2:
            nf2[y] = q2.normal_form(q2.elem_row(AlgElem.word(y)))
        cv = specialize_int(c, a)
        for i, v in nf1[x][0].items():
            for j, v2 in nf2[y][0].items():
                image[(i, j)] = (image.get((i, j), 0) + cv * v * v2) % p
    image = {k: v for k, v in image.items() if v}
    # recombine: sum over the two translate parts plus the residual must equal comp
    acc: Dict[Pair, int] = {}

    def add(pair, v):
        acc[pair] = (acc.get(pair, 0) + v) % p

    for (x, y), c in comp.terms.items():
        cv = specialize_int(c, a)
        rem1, comb1 = nf1[x]
        rem2, comb2 = nf2[y]
        for ti, k in comb1.items():
            for v, rc in q1.translate_row(q1.translates[ti]).items():
                add((q1.words[v], y), cv * k * rc)
        for i, v1 in rem1.items():
            for ti, k in comb2.items():
                for v, rc in q2.translate_row(q2.translates[ti]).items():
                    add((q1.words[i], q2.words[v]), cv * v1 * k * rc)
            for j, v2 in rem2.items():
                add((q1.words[i], q2.words[j]), cv * v1 * v2)
    for (x, y), c in comp.terms.items():
        add((x, y), -specialize_int(c, a))
    cert = {
        "leg_windows": [w1.text(), w2.text()],
        "n_left_translates": sum(len(nf1[x][1]) for x in nf1),
        "n_right_translates": sum(len(nf2[y][1]) for y in nf2),
        "recombines": not any(acc.values()),
    }
    return image, cert


def delta_check_relator(rel: Relator, w: Window, a: EvalAssign, pts: Optional[EvalPointSet] = None,
                        families=DEFINING_FAMILIES, max_slack: int = 4) -> CheckReport:
    """Check that every kept component of delta(rel) lies in I (x) A + A (x) I.

    Per component: PASS when the image in Q1 (x) Q2 vanishes (certificate
    recombined); otherwise the can (x) can oracle decides between FAIL
    (nonzero image there too) and INCONCLUSIVE (window too small).  Leg
    windows get Θ-weight slack 1, 2, ..., max_slack until the image vanishes.
    """
    t0 = time.perf_counter()
    families = tuple(sorted(set(families)))
    if not w.contains_elem(rel.elem):
        raise ValueError(f"{rel.id} is not in window {w.text()}")
    pts = pts or EvalPointSet(a.p, 0, 3, 3)
    d = delta(rel.elem, w)
    comps = []
    statuses = []
    for key in d.components():
        comp = d.component(key)
        for slack in range(1, max_slack + 1):
            image, cert = tensor_normal_form(d, key, w, a, families, slack)
            if not image:
                break
        oracle = tensor_oracle_zero(comp, pts) if key[0].n + key[1].n <= pts.n_max else None
        if not image and cert["recombines"]:
            st = PASS
        elif oracle is False:
            st = FAIL
        else:
            st = INCONCLUSIVE
        statuses.append(st)
        comps.append({"left": list(key[0]), "right": list(key[1]), "status": st,
                      "n_terms": len(comp.terms), "certificate": cert, "oracle_zero": oracle})
    if not statuses:
        status = INCONCLUSIVE
    elif FAIL in statuses:
        status = FAIL
    elif INCONCLUSIVE in statuses:
        status = INCONCLUSIVE
    else:
        status = PASS
    return CheckReport(rel.id, rel.family.name, rel.params, status, comps, sorted(d.dropped),
                       time.perf_counter() - t0)
