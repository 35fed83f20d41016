"""Exact linear algebra over the local ring Z_(p) and the field F_p.

Matrices are lists of rows of :class:`~fractions.Fraction`.  Module layouts
are lists of "orders": an integer ``e`` for a Z/p^e coordinate, ``None`` for a
free Z_(p) coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .arith import INF, NotPLocalError, reduce_mod, vp

Matrix = list[list[Fraction]]
Vector = list[Fraction]
Orders = Sequence[Optional[int]]

ZERO = Fraction(0)
ONE = Fraction(1)


def zeros(m: int, n: int) -> Matrix:
    return [[ZERO] * n for _ in range(m)]


def identity(n: int) -> Matrix:
    out = zeros(n, n)
    for i in range(n):
        out[i][i] = ONE
    return out


def to_matrix(rows) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        new = [ZERO] * cols
        for l in range(inner):
            x = row[l]
            if x:
                brow = b[l]
                for j in range(cols):
                    if brow[j]:
                        new[j] += x * brow[j]
        out.append(new)
    return out


def mat_vec(a: Matrix, v: Sequence[Fraction]) -> Vector:
    return [sum((x * y for x, y in zip(row, v) if x and y), ZERO) for row in a]


def mat_add(a: Matrix, b: Matrix, scale: Fraction = ONE) -> Matrix:
    return [[x + scale * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def reduce_vector(v: Sequence[Fraction], orders: Orders, p: int) -> Vector:
    """Canonical representative: torsion coordinates to residues in [0, p^e)."""
    out = []
    for x, e in zip(v, orders):
        out.append(Fraction(reduce_mod(x, p, e)) if e is not None else Fraction(x))
    return out


def reduce_rows(a: Matrix, orders: Orders, p: int) -> Matrix:
    """Reduce row i of ``a`` modulo the order of target coordinate i."""
    out = []
    for row, e in zip(a, orders):
        if e is None:
            out.append(list(row))
        else:
            out.append([Fraction(reduce_mod(x, p, e)) if x else ZERO for x in row])
    return out


def is_zero_vector(v: Sequence[Fraction], orders: Orders, p: int) -> bool:
    for x, e in zip(v, orders):
        if e is None:
            if x != 0:
                return False
        elif x != 0 and vp(x, p) < e:
            return False
    return True


def is_zero_matrix(a: Matrix, orders: Orders, p: int) -> bool:
    """All columns vanish in the module with the given (row) layout."""
    return all(is_zero_vector(col, orders, p) for col in transpose(a)) if a else True


def relation_columns(orders: Orders, p: int) -> Matrix:
    """Matrix whose columns p^e * e_i span the relations of the layout."""
    tors = [i for i, e in enumerate(orders) if e is not None]
    out = zeros(len(orders), len(tors))
    for c, i in enumerate(tors):
        out[i][c] = Fraction(p) ** orders[i]
    return out


def hstack(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return [list(r) for r in b]
    if not b or not b[0]:
        return [list(r) for r in a]
    return [list(ra) + list(rb) for ra, rb in zip(a, b)]


@dataclass
class SmithForm:
    """``P @ A @ Q == D`` with ``D`` diagonal, entries ``p**v`` for the first ``rank`` positions.

    ``P`` and ``Q`` are invertible over Z_(p); ``P_inv`` is the inverse of ``P``.
    """

    P: Matrix
    P_inv: Matrix
    Q: Matrix
    diag: list[Fraction]
    rows: int
    cols: int

    @property
    def rank(self) -> int:
        return len(self.diag)

    def valuations(self, p: int) -> list[int]:
        return [vp(d, p) for d in self.diag]


def smith_normal_form(a: Matrix, p: int) -> SmithForm:
    """Smith normal form over Z_(p).

    ``a`` must have p-local entries.  Z_(p) is local, so a pivot of minimal
    valuation divides every remaining entry and elimination never needs gcd
    steps.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    for row in a:
        for x in row:
            if x and x.denominator % p == 0:
                raise NotPLocalError(f"matrix entry {x} is not p-local")
    b = [list(map(Fraction, row)) for row in a]
    P = identity(m)
    P_inv = identity(m)
    Q = identity(n)
    diag: list[Fraction] = []
    pf = Fraction(p)
    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            row = b[i]
            for j in range(t, n):
                x = row[j]
                if x:
                    v = vp(x, p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, r, c = best
        if r != t:
            b[t], b[r] = b[r], b[t]
            P[t], P[r] = P[r], P[t]
            for row in P_inv:
                row[t], row[r] = row[r], row[t]
        if c != t:
            for row in b:
                row[t], row[c] = row[c], row[t]
            for row in Q:
                row[t], row[c] = row[c], row[t]
        pv = pf**v
        unit = b[t][t] / pv
        if unit != 1:
            inv = 1 / unit
            b[t] = [x * inv for x in b[t]]
            P[t] = [x * inv for x in P[t]]
            for row in P_inv:
                row[t] *= unit
        prow = b[t]
        for i in range(t + 1, m):
            x = b[i][t]
            if x:
                f = x / pv
                bi = b[i]
                for j in range(t, n):
                    if prow[j]:
                        bi[j] -= f * prow[j]
                Pi, Pt = P[i], P[t]
                for j in range(m):
                    if Pt[j]:
                        Pi[j] -= f * Pt[j]
                for row in P_inv:
                    if row[i]:
                        row[t] += f * row[i]
        for j in range(t + 1, n):
            x = prow[j]
            if x:
                f = x / pv
                for row in b:
                    if row[t]:
                        row[j] -= f * row[t]
                for row in Q:
                    if row[t]:
                        row[j] -= f * row[t]
        diag.append(pv)
    return SmithForm(P, P_inv, Q, diag, m, n)


def plocal_scale(a: Matrix, p: int) -> Matrix:
    """Multiply by a power of p so every entry becomes p-local (kernel unchanged)."""
    worst = 0
    for row in a:
        for x in row:
            if x:
                worst = min(worst, vp(x, p))
    if worst == 0:
        return [list(r) for r in a]
    s = Fraction(p) ** (-worst)
    return [[x * s for x in row] for row in a]


def kernel_basis(a: Matrix, p: int, ncols: int | None = None) -> list[Vector]:
    """Z_(p)-basis of ``{x : a x = 0}`` for a matrix with rational entries."""
    if ncols is None:
        ncols = len(a[0]) if a else 0
    if not a:
        return [[ONE if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    snf = smith_normal_form(plocal_scale(a, p), p)
    return [[snf.Q[i][j] for i in range(ncols)] for j in range(snf.rank, ncols)]


def kernel(f: Matrix, src: Orders, tgt: Orders, p: int) -> list[Vector]:
    """Generators of the kernel of the Z_(p)-linear map ``f`` between layouts.

    ``f`` has one row per target coordinate and one column per source
    coordinate.  The returned vectors are reduced in the source layout; zero
    vectors are dropped.
    """
    nsrc = len(src)
    if nsrc == 0:
        return []
    if len(tgt) == 0:
        return [[ONE if i == j else ZERO for i in range(nsrc)] for j in range(nsrc)]
    combined = hstack(f, relation_columns(tgt, p))
    out = []
    for vec in kernel_basis(combined, p, len(combined[0])):
        u = reduce_vector(vec[:nsrc], src, p)
        if not is_zero_vector(u, src, p):
            out.append(u)
    return out


def solve(f: Matrix, b: Sequence[Fraction], tgt: Orders, p: int, nsrc: int) -> Optional[Vector]:
    """Some ``u`` with ``f u == b`` in the target layout, or ``None``."""
    if nsrc == 0:
        return [] if is_zero_vector(b, tgt, p) else None
    if len(tgt) == 0:
        return [ZERO] * nsrc
    combined = hstack(f, relation_columns(tgt, p))
    snf = smith_normal_form(combined, p)
    pb = mat_vec(snf.P, b)
    w = [ZERO] * len(combined[0])
    for i, x in enumerate(pb):
        if i < snf.rank:
            y = x / snf.diag[i]
            if y and y.denominator % p == 0:
                return None
            w[i] = y
        elif x != 0:
            return None
    sol = mat_vec(snf.Q, w)
    return sol[:nsrc]


def rref_mod_p(rows: list[list[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form over F_p; returns (rows, pivot columns)."""
    a = [[x % p for x in row] for row in rows]
    if not a:
        return a, []
    ncols = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [x * inv % p for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a, pivots


def charpoly(a: Matrix) -> list[Fraction]:
    """Characteristic polynomial det(X I - a), coefficients lowest degree first.

    Faddeev-LeVerrier; exact over Q.
    """
    n = len(a)
    coeffs = [ZERO] * (n + 1)
    coeffs[n] = ONE
    m = zeros(n, n)
    for k in range(1, n + 1):
        am = mat_mul(a, m) if k > 1 else zeros(n, n)
        m = [[am[i][j] + (coeffs[n - k + 1] if i == j else ZERO) for j in range(n)] for i in range(n)]
        am = mat_mul(a, m)
        coeffs[n - k] = -sum((am[i][i] for i in range(n)), ZERO) / k
    return coeffs


def min_valuation(v: Sequence[Fraction], p: int):
    best = INF
    for x in v:
        if x:
            best = min(best, vp(x, p))
    return best
