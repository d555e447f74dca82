"""Linear algebra over F_p: sparse incremental echelon form plus small dense helpers.

Rows are ``{column: value}`` dicts with values in [1, p).  A stored pivot row has
its largest column as pivot, scaled to 1.
"""
from __future__ import annotations

import heapq
from typing import Dict, List, Optional, Sequence, Tuple

Row = Dict[int, int]


def _axpy(row: Row, f: int, other: Row, p: int) -> None:
    """row -= f * other, in place."""
    for c, v in other.items():
        x = (row.get(c, 0) - f * v) % p
        if x:
            row[c] = x
        else:
            row.pop(c, None)


class SparseEchelon:
    """Incremental row echelon form over F_p.

    With ``track=True`` every pivot row remembers which inserted rows it is a
    combination of, which is what ideal-membership certificates are built from.
    """

    def __init__(self, p: int, track: bool = False):
        self.p = p
        self.track = track
        self.pivots: Dict[int, Tuple[Row, Optional[Row]]] = {}
        self.n_inserted = 0

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def _reduce_leading(self, row: Row, hist: Optional[Row]) -> None:
        p = self.p
        pivots = self.pivots
        while row:
            c = max(row)
            piv = pivots.get(c)
            if piv is None:
                return
            f = row[c]
            _axpy(row, f, piv[0], p)
            if hist is not None:
                _axpy(hist, f, piv[1], p)

    def add(self, row: Row) -> bool:
        """Insert a row; returns True when it raised the rank."""
        p = self.p
        row = {c: v % p for c, v in row.items() if v % p}
        hist = {self.n_inserted: 1} if self.track else None
        self.n_inserted += 1
        self._reduce_leading(row, hist)
        if not row:
            return False
        c = max(row)
        inv = pow(row[c], -1, p)
        if inv != 1:
            row = {k: v * inv % p for k, v in row.items()}
            if hist is not None:
                hist = {k: v * inv % p for k, v in hist.items()}
        self.pivots[c] = (row, hist)
        return True

    def reduce(self, row: Row) -> Tuple[Row, Row]:
        """Fully reduce ``row``; returns (remainder, combination).

        ``row - remainder`` equals sum(combination[i] * inserted_row[i]); the
        remainder has no pivot columns, so it is a normal form modulo the span.
        """
        p = self.p
        row = {c: v % p for c, v in row.items() if v % p}
        comb: Row = {}
        heap = [-c for c in row]
        heapq.heapify(heap)
        seen = set()
        while heap:
            c = -heapq.heappop(heap)
            if c in seen:
                continue
            seen.add(c)
            f = row.get(c)
            if not f:
                continue
            piv = self.pivots.get(c)
            if piv is None:
                continue
            prow, phist = piv
            for k in prow:
                if k not in row and k < c:
                    heapq.heappush(heap, -k)
            _axpy(row, f, prow, p)
            if phist is not None:
                for k, v in phist.items():
                    comb[k] = (comb.get(k, 0) + f * v) % p
        return row, {k: v for k, v in comb.items() if v}


def rank_mod(rows: Sequence[Sequence[int]], p: int) -> int:
    ech = SparseEchelon(p)
    for r in rows:
        ech.add({j: v for j, v in enumerate(r) if v % p})
    return ech.rank


def rref_mod(mat: Sequence[Sequence[int]], p: int) -> Tuple[List[List[int]], List[int]]:
    """Dense reduced row echelon form; returns (rows, pivot columns)."""
    a = [[v % p for v in r] for r in mat]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivcols: List[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [v * inv % p for v in a[r]]
        for i in range(nrows):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        pivcols.append(c)
        r += 1
        if r == nrows:
            break
    return a[:r], pivcols


def nullspace_mod(mat: Sequence[Sequence[int]], p: int, ncols: Optional[int] = None) -> List[List[int]]:
    """Basis of {v : mat v = 0} over F_p."""
    if ncols is None:
        ncols = len(mat[0]) if mat else 0
    if not mat:
        return [[int(i == j) for i in range(ncols)] for j in range(ncols)]
    red, pivcols = rref_mod(mat, p)
    free = [c for c in range(ncols) if c not in set(pivcols)]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for row, pc in zip(red, pivcols):
            v[pc] = -row[fc] % p
        basis.append(v)
    return basis


def matvec_mod(mat: Sequence[Sequence[int]], v: Sequence[int], p: int) -> List[int]:
    return [sum(a * b for a, b in zip(row, v)) % p for row in mat]


def kron_mod(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]], p: int) -> List[List[int]]:
    return [[x * y % p for x in ra for y in rb] for ra in a for rb in b]
