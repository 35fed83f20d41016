"""Finitely presented Z_(p)-modules with a Psi^q action, as stand-ins for discrete A-modules.

A module is a direct sum of cyclic summands Z/p^e (torsion, listed first) and
a free part Z_(p)^r, together with the matrix T of Psi^q in that basis.  By
the determinacy of the A-action on discrete modules, T carries all the
structure.  Elements are tuples of Fractions with torsion coordinates reduced
to residues.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Sequence

from .arith import (
    RingConfig,
    Variant,
    format_rational,
    is_plocal,
    make_config,
    parse_rational,
    reduce_mod,
    vp,
)
from .linalg import (
    Matrix,
    charpoly,
    identity,
    is_zero_matrix,
    is_zero_vector,
    kernel,
    mat_mul,
    mat_vec,
    reduce_rows,
    reduce_vector,
    relation_columns,
    smith_normal_form,
    zeros,
)
from .opring import (
    OperationPoly,
    PhiVector,
    TruncationMismatch,
    adams_expansion,
)

ZERO = Fraction(0)
ONE = Fraction(1)

Element = tuple  # tuple[Fraction, ...]


class ModuleValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class NotDiscreteError(ValueError):
    """No annihilation exponent within the search bound."""


@dataclass(frozen=True)
class FpModule:
    cfg: RingConfig
    torsion_exponents: tuple[int, ...]
    free_rank: int
    action: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.torsion_exponents) + self.free_rank

    @property
    def orders(self) -> list[Optional[int]]:
        return list(self.torsion_exponents) + [None] * self.free_rank

    @property
    def ntors(self) -> int:
        return len(self.torsion_exponents)

    @property
    def max_exponent(self) -> int:
        return max(self.torsion_exponents, default=0)

    @property
    def p(self) -> int:
        return self.cfg.p

    def matrix(self) -> Matrix:
        return [list(row) for row in self.action]

    def element(self, coords: Sequence) -> Element:
        if len(coords) != self.dim:
            raise ValueError(f"element has {len(coords)} coordinates, module has {self.dim}")
        v = [parse_rational(c) if isinstance(c, str) else Fraction(c) for c in coords]
        for x in v:
            if not is_plocal(x, self.p):
                raise ValueError(f"coordinate {x} is not {self.p}-local")
        return tuple(reduce_vector(v, self.orders, self.p))

    def zero(self) -> Element:
        return (ZERO,) * self.dim

    def basis(self) -> list[Element]:
        return [tuple(ONE if i == j else ZERO for i in range(self.dim)) for j in range(self.dim)]

    def is_zero(self, v: Sequence[Fraction]) -> bool:
        return is_zero_vector(v, self.orders, self.p)

    def reduce(self, v: Sequence[Fraction]) -> Element:
        return tuple(reduce_vector(v, self.orders, self.p))

    def add(self, v, w) -> Element:
        return self.reduce([a + b for a, b in zip(v, w)])

    def scale(self, c, v) -> Element:
        c = Fraction(c)
        return self.reduce([c * a for a in v])

    def act(self, v: Sequence[Fraction]) -> Element:
        """Psi^q applied to ``v``."""
        return self.reduce(mat_vec(self.matrix(), v))

    def apply_linear(self, v, node: Fraction) -> Element:
        """(Psi^q - node) v."""
        tv = mat_vec(self.matrix(), v)
        return self.reduce([a - node * b for a, b in zip(tv, v)])

    def apply_poly(self, f: OperationPoly, v: Sequence[Fraction]) -> Element:
        acc = [ZERO] * self.dim
        T = self.matrix()
        for c in reversed(f.coeffs):
            acc = mat_vec(T, acc)
            acc = [a + c * b for a, b in zip(acc, v)]
            acc = reduce_vector(acc, self.orders, self.p)
        return tuple(acc)

    def apply_theta_range(self, v, start: int, stop: int) -> Element:
        """prod_{i=start+1}^{stop} (Psi^q - q_i) applied to v, i.e. (Theta_stop/Theta_start) v."""
        w = tuple(v)
        for i in range(start + 1, stop + 1):
            w = self.apply_linear(w, self.cfg.node(i))
        return w

    def apply_theta(self, n: int, v) -> Element:
        return self.apply_theta_range(v, 0, n)

    def apply_punctured(self, n: int, j: int, v) -> Element:
        w = tuple(v)
        for i in range(1, n + 1):
            if i != j:
                w = self.apply_linear(w, self.cfg.node(i))
        return w

    def to_json(self) -> dict:
        return {
            "p": self.cfg.p,
            "q": self.cfg.q,
            "variant": self.cfg.variant.value,
            "torsion_exponents": list(self.torsion_exponents),
            "free_rank": self.free_rank,
            "action": [[format_rational(x) for x in row] for row in self.action],
        }


@dataclass(frozen=True)
class RationalizedModule:
    """M tensor Q: the free block of the action over Q."""

    cfg: RingConfig
    dimension: int
    action: tuple[tuple[Fraction, ...], ...]

    def matrix(self) -> Matrix:
        return [list(r) for r in self.action]


def element_to_json(v: Sequence[Fraction]) -> list[str]:
    return [format_rational(x) for x in v]


# -- construction -----------------------------------------------------------


def validate_module(
    cfg: RingConfig,
    torsion_exponents: Sequence[int],
    free_rank: int,
    action: Sequence[Sequence],
) -> FpModule:
    """Check the well-definedness constraints and return the canonical module.

    Raises :class:`ModuleValidationError` listing every violated constraint.
    """
    p = cfg.p
    errors: list[str] = []
    exps = tuple(int(e) for e in torsion_exponents)
    for i, e in enumerate(exps):
        if e < 1:
            errors.append(f"torsion exponent {i} is {e}, must be >= 1")
    if free_rank < 0:
        errors.append(f"free rank {free_rank} is negative")
    n = len(exps) + max(free_rank, 0)
    if len(action) != n or any(len(row) != n for row in action):
        errors.append(f"action must be a {n}x{n} matrix")
        raise ModuleValidationError(errors)
    T = [[parse_rational(x) if isinstance(x, str) else Fraction(x) for x in row] for row in action]
    s = len(exps)
    for i in range(n):
        for j in range(n):
            x = T[i][j]
            if not is_plocal(x, p):
                errors.append(f"action[{i}][{j}] = {format_rational(x)} is not {p}-local")
                continue
            if j < s and x:
                if i >= s:
                    errors.append(f"action[{i}][{j}]: torsion generator {j} maps to free coordinate {i}")
                elif exps[j] < exps[i] and vp(x, p) < exps[i] - exps[j] and reduce_mod(x, p, exps[i]) != 0:
                    errors.append(
                        f"action[{i}][{j}] = {format_rational(x)} needs valuation >= {exps[i] - exps[j]}"
                    )
    if errors:
        raise ModuleValidationError(errors)
    orders = list(exps) + [None] * free_rank
    T = reduce_rows(T, orders, p)
    return FpModule(cfg, exps, free_rank, tuple(tuple(r) for r in T))


def module_from_json(data: Mapping, cfg: RingConfig | None = None) -> FpModule:
    if cfg is None:
        cfg = make_config(int(data["p"]), data.get("q"), data.get("variant", "nonsplit"))
    return validate_module(cfg, data.get("torsion_exponents", []), int(data.get("free_rank", 0)), data["action"])


def load_module(path: str, cfg: RingConfig | None = None) -> FpModule:
    with open(path) as fh:
        return module_from_json(json.load(fh), cfg)


def cyclic(cfg: RingConfig, e: int, t=1) -> FpModule:
    """Z/p^e with Psi^q acting by ``t``."""
    return validate_module(cfg, [e], 0, [[t]])


def free(cfg: RingConfig, t) -> FpModule:
    """Z_(p) with Psi^q acting by ``t``."""
    return validate_module(cfg, [], 1, [[t]])


def zero_module(cfg: RingConfig) -> FpModule:
    return validate_module(cfg, [], 0, [])


def from_presentation(cfg: RingConfig, relations: Matrix, action: Matrix) -> tuple[FpModule, Matrix]:
    """Normalize Z_(p)^g / (column span of ``relations``) with action ``action``.

    Returns the module in invariant-factor form and the matrix of the
    quotient map Z_(p)^g -> module.  ``action`` must preserve the relation
    lattice.
    """
    p = cfg.p
    g = len(action)
    rel = relations if relations and relations[0] else [[] for _ in range(g)]
    if rel and rel[0]:
        snf = smith_normal_form(rel, p)
        P, P_inv, vals = snf.P, snf.P_inv, snf.valuations(p)
    else:
        P, P_inv, vals = identity(g), identity(g), []
    tors = [(i, v) for i, v in enumerate(vals) if v > 0]
    frees = list(range(len(vals), g))
    keep = [i for i, _ in tors] + frees
    T_new = mat_mul(mat_mul(P, action), P_inv)
    T_kept = [[T_new[i][j] for j in keep] for i in keep]
    module = validate_module(cfg, [v for _, v in tors], len(frees), T_kept)
    projection = reduce_rows([list(P[i]) for i in keep], module.orders, p)
    return module, projection


# -- discreteness -----------------------------------------------------------


def default_n_max(M: FpModule) -> int:
    return 4 * (2 * M.p - 2) * max(1, M.max_exponent)


def default_k_max(M: FpModule) -> int:
    return M.max_exponent + 2


@lru_cache(maxsize=4096)
def _annihilation_exponent(M: FpModule, n_max: int) -> Optional[int]:
    orders = M.orders
    A = identity(M.dim)
    T = M.matrix()
    for n in range(0, n_max + 1):
        if n > 0:
            qn = M.cfg.node(n)
            shifted = [[T[i][j] - (qn if i == j else ZERO) for j in range(M.dim)] for i in range(M.dim)]
            A = reduce_rows(mat_mul(A, shifted), orders, M.p)
        if is_zero_matrix(A, orders, M.p):
            return n
    return None


def annihilation_exponent(M: FpModule, n_max: int | None = None) -> Optional[int]:
    """Least n <= n_max with Theta_n(Psi^q) = 0 on M, or None."""
    return _annihilation_exponent(M, default_n_max(M) if n_max is None else n_max)


def element_annihilation_exponent(M: FpModule, x, n_max: int | None = None) -> Optional[int]:
    n_max = default_n_max(M) if n_max is None else n_max
    v = M.reduce(x)
    for n in range(0, n_max + 1):
        if n > 0:
            v = M.apply_linear(v, M.cfg.node(n))
        if M.is_zero(v):
            return n
    return None


def require_exponent(M: FpModule, n_max: int | None = None) -> int:
    n = annihilation_exponent(M, n_max)
    if n is None:
        raise NotDiscreteError(f"no annihilation exponent <= {default_n_max(M) if n_max is None else n_max}")
    return n


def apply_operation(M: FpModule, a: PhiVector, x, n_max: int | None = None) -> Element:
    """sum_k a_k Phi_k x."""
    n = require_exponent(M, n_max)
    if a.truncation < n:
        raise TruncationMismatch(f"operation truncated at {a.truncation} < annihilation exponent {n}")
    v = M.reduce(x)
    acc = [ZERO] * M.dim
    for k in range(n):
        if k > 0:
            v = M.apply_linear(v, M.cfg.node(k))
        c = a.coeffs[k]
        if c:
            acc = [s + c * t for s, t in zip(acc, v)]
    return M.reduce(acc)


def adams_action(M: FpModule, j, x, n_max: int | None = None) -> Element:
    """Psi^j x for a p-local unit j."""
    n = require_exponent(M, n_max)
    return apply_operation(M, adams_expansion(j, max(n, 1), M.cfg), x, n_max)


def coaction(M: FpModule, x, n_max: int | None = None) -> list[tuple[int, Element]]:
    """Nonzero pairs (n, Phi_n x): the coaction in the dual-basis encoding."""
    n = require_exponent(M, n_max)
    out = []
    v = M.reduce(x)
    for k in range(n):
        if k > 0:
            v = M.apply_linear(v, M.cfg.node(k))
        if not M.is_zero(v):
            out.append((k, v))
    return out


# -- Bousfield conditions ---------------------------------------------------


@dataclass
class BousfieldReport:
    a: bool = True
    b: bool = True
    b_detail: dict = field(default_factory=dict)
    c: str = "pass"
    c_k: Optional[int] = None
    c_holds: bool = True

    @property
    def passed(self) -> bool:
        return self.a and self.b and self.c == "pass"

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "a": self.a,
            "b": {"passed": self.b, **self.b_detail},
            "c": {"status": self.c, "k": self.c_k, "holds_for_psi_q": self.c_holds},
        }


def _power_exponent_roots(poly: list[Fraction], base: int) -> tuple[dict[int, int], list[Fraction]]:
    """Roots of the form base**e (with multiplicity) and the undeflated remainder."""
    roots: dict[int, int] = {}
    f = OperationPoly(tuple(poly))
    if f.degree <= 0:
        return roots, list(f.coeffs)
    if f.coeffs[0] == 0:
        return roots, list(f.coeffs)
    lead = f.coeffs[-1]
    big = 1 + max(abs(c / lead) for c in f.coeffs[:-1])
    small = 1 + max(abs(c / f.coeffs[0]) for c in f.coeffs[1:])
    e_hi = int(math.log(float(big)) / math.log(base)) + 2
    e_lo = -(int(math.log(float(small)) / math.log(base)) + 2)
    for e in range(e_lo, e_hi + 1):
        r = Fraction(base) ** e
        while f.degree > 0:
            quot, rem = f.divmod(OperationPoly((-r, ONE)))
            if not rem.is_zero():
                break
            roots[e] = roots.get(e, 0) + 1
            f = quot
    return roots, list(f.coeffs)


def _check_b(M: FpModule) -> tuple[bool, dict]:
    r = M.free_rank
    if r == 0:
        return True, {"eigenvalue_exponents": []}
    s = M.ntors
    Tff = [[M.action[s + i][s + j] for j in range(r)] for i in range(r)]
    chi = charpoly(Tff)
    base = M.cfg.base
    roots, rest = _power_exponent_roots(chi, base)
    if len(rest) > 1:
        return False, {
            "reason": "eigenvalue not a power of the base",
            "residual_factor": [format_rational(c) for c in rest],
            "eigenvalue_exponents": sorted(roots),
        }
    # squarefree minimal polynomial: prod over distinct eigenvalues kills T
    prod = identity(r)
    for e in roots:
        lam = Fraction(base) ** e
        prod = mat_mul(prod, [[Tff[i][j] - (lam if i == j else ZERO) for j in range(r)] for i in range(r)])
    if any(x for row in prod for x in row):
        return False, {
            "reason": "not diagonalisable",
            "eigenvalue_exponents": sorted(roots),
            "multiplicities": {str(e): m for e, m in roots.items()},
        }
    return True, {"eigenvalue_exponents": sorted(roots)}


def _mat_pow_mod(a: list[list[int]], e: int, mod: int) -> list[list[int]]:
    n = len(a)
    result = [[int(i == j) for j in range(n)] for i in range(n)]
    base = a
    while e:
        if e & 1:
            result = _mul_mod(result, base, mod)
        base = _mul_mod(base, base, mod)
        e >>= 1
    return result


def _mul_mod(a, b, mod):
    n = len(a)
    m = len(b[0]) if b else 0
    return [[sum(a[i][l] * b[l][j] for l in range(len(b))) % mod for j in range(m)] for i in range(n)]


def _check_c(M: FpModule, k_max: int) -> Optional[int]:
    """Least k <= k_max with T^{(p-1)p^(k-1)} - I carrying M into p^m M on torsion rows, m = 1..E.

    Free rows are left to the diagonalisability check.
    """
    p, s = M.p, M.ntors
    if s == 0:
        return 1
    L = M.max_exponent
    mod = p**L
    T = [[reduce_mod(x, p, L) for x in row] for row in M.action]
    for k in range(1, k_max + 1):
        D = _mat_pow_mod(T, (p - 1) * p ** (k - 1), mod)
        for i in range(s):
            D[i][i] = (D[i][i] - 1) % mod
        # m = E is the strongest level: row i must vanish mod p^{e_i}
        if all(D[i][j] % p ** M.torsion_exponents[i] == 0 for i in range(s) for j in range(M.dim)):
            return k
    return None


def bousfield_check(M: FpModule, k_max: int | None = None) -> BousfieldReport:
    """Conditions (a)-(c) for the Psi^q action.

    (a) holds for every finitely presented module.  (b) asks the free block to
    be diagonalisable over Q with eigenvalues powers of the base.  (c) asks
    that T^{(p-1)p^(k-1)} act trivially modulo p^m for some k <= k_max.  When
    (b) fails, (c) is only reported as "indeterminate": it is tested with the
    single generator Psi^q.
    """
    k_max = default_k_max(M) if k_max is None else k_max
    report = BousfieldReport()
    report.b, report.b_detail = _check_b(M)
    k = _check_c(M, k_max)
    report.c_k = k
    report.c_holds = k is not None
    if not report.b:
        report.c = "indeterminate"
    else:
        report.c = "pass" if k is not None else "fail"
    return report


# -- combinators ------------------------------------------------------------


def direct_sum(M: FpModule, N: FpModule) -> FpModule:
    if M.cfg != N.cfg:
        raise ValueError("modules over different rings")
    sM, sN = M.ntors, N.ntors
    # new position of each old coordinate
    pos_M = list(range(sM)) + [sM + sN + i for i in range(M.free_rank)]
    pos_N = [sM + i for i in range(sN)] + [sM + sN + M.free_rank + i for i in range(N.free_rank)]
    n = M.dim + N.dim
    T = zeros(n, n)
    for src, pos in ((M, pos_M), (N, pos_N)):
        for i in range(src.dim):
            for j in range(src.dim):
                T[pos[i]][pos[j]] = src.action[i][j]
    return validate_module(M.cfg, M.torsion_exponents + N.torsion_exponents, M.free_rank + N.free_rank, T)


def orbit(M: FpModule, x) -> list[Element]:
    """x, Tx, ..., T^{d-1}x with d = dim M; spans the Z_(p)[Psi^q]-submodule generated by x."""
    out = [M.reduce(x)]
    for _ in range(max(M.dim - 1, 0)):
        out.append(M.act(out[-1]))
    return out


def quotient_by_orbit(M: FpModule, gens: Sequence) -> FpModule:
    return quotient_with_projection(M, gens)[0]


def quotient_with_projection(M: FpModule, gens: Sequence) -> tuple[FpModule, Matrix]:
    vectors = []
    for g in gens:
        try:
            x = M.element(g)
        except ValueError as exc:
            raise ValueError(f"quotient generator {list(g)} is not an element of M: {exc}") from exc
        vectors.extend(orbit(M, x))
    rel = relation_columns(M.orders, M.p)
    cols = [list(col) for col in zip(*rel)] if rel and rel[0] else []
    cols += [list(v) for v in vectors]
    relations = [[c[i] for c in cols] for i in range(M.dim)] if cols else [[] for _ in range(M.dim)]
    return from_presentation(M.cfg, relations, M.matrix())


def torsion_submodule(M: FpModule) -> FpModule:
    s = M.ntors
    return validate_module(M.cfg, M.torsion_exponents, 0, [row[:s] for row in M.action[:s]])


def rationalize(M: FpModule) -> RationalizedModule:
    s = M.ntors
    block = tuple(tuple(row[s:]) for row in M.action[s:])
    return RationalizedModule(M.cfg, M.free_rank, block)


def twist(M: FpModule, i: int) -> FpModule:
    """Same group, Psi^q acting by base^i * T."""
    c = Fraction(M.cfg.base) ** i
    return validate_module(M.cfg, M.torsion_exponents, M.free_rank, [[c * x for x in row] for row in M.action])


def module_combinators(tag: str, *args):
    ops = {
        "direct_sum": direct_sum,
        "quotient_by_orbit": quotient_by_orbit,
        "torsion_submodule": torsion_submodule,
        "rationalize": rationalize,
        "twist": twist,
    }
    if tag not in ops:
        raise ValueError(f"unknown combinator {tag!r}")
    return ops[tag](*args)


# -- homomorphisms ----------------------------------------------------------


def _hom_variables(M: FpModule, N: FpModule) -> list[tuple[int, int, int, Optional[int]]]:
    """Free parameters (i, j, w, order) of Hom(M, N): S[i][j] = p^w u with u of the given order."""
    out = []
    for i, ei in enumerate(N.orders):
        for j, ej in enumerate(M.orders):
            if ei is None:
                if ej is None:
                    out.append((i, j, 0, None))
                continue
            w = max(0, ei - ej) if ej is not None else 0
            if ei - w > 0:
                out.append((i, j, w, ei - w))
    return out


def _vars_to_matrix(M: FpModule, N: FpModule, variables, u) -> Matrix:
    S = zeros(N.dim, M.dim)
    pf = Fraction(M.p)
    for (i, j, w, _), x in zip(variables, u):
        S[i][j] = pf**w * x
    return reduce_rows(S, N.orders, M.p)


def is_plain_hom(M: FpModule, N: FpModule, S: Matrix) -> bool:
    """S is a well-defined Z_(p)-linear map M -> N."""
    p = M.p
    if len(S) != N.dim or any(len(r) != M.dim for r in S):
        return False
    for i, ei in enumerate(N.orders):
        for j, ej in enumerate(M.orders):
            x = Fraction(S[i][j])
            if not is_plocal(x, p):
                return False
            if ej is None or not x:
                continue
            if ei is None:
                return False
            if ei > ej and reduce_mod(x, p, ei) % p ** (ei - ej):
                return False
    return True


def is_hom(M: FpModule, N: FpModule, S: Matrix) -> bool:
    """S is a Z_(p)-map commuting with Psi^q, hence an A-module map between discrete modules."""
    if not is_plain_hom(M, N, S):
        return False
    lhs = mat_mul(S, M.matrix())
    rhs = mat_mul(N.matrix(), S)
    diff = [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(lhs, rhs)]
    return is_zero_matrix(diff, N.orders, M.p)


def plain_hom_generators(M: FpModule, N: FpModule) -> list[Matrix]:
    variables = _hom_variables(M, N)
    out = []
    for t in range(len(variables)):
        u = [ONE if s == t else ZERO for s in range(len(variables))]
        out.append(_vars_to_matrix(M, N, variables, u))
    return out


def hom_A(M: FpModule, N: FpModule) -> list[Matrix]:
    """Generators of the Z_(p)-module of maps M -> N commuting with Psi^q."""
    variables = _hom_variables(M, N)
    if not variables:
        return []
    src_orders = [v[3] for v in variables]
    tgt_orders = [N.orders[a] for a in range(N.dim) for _ in range(M.dim)]
    TM, TN = M.matrix(), N.matrix()
    pf = Fraction(M.p)
    C = zeros(N.dim * M.dim, len(variables))
    for col, (i, j, w, _) in enumerate(variables):
        scale = pf**w
        for a in range(N.dim):
            for b in range(M.dim):
                val = ZERO
                if a == i:
                    val += TM[j][b]
                if b == j:
                    val -= TN[a][i]
                if val:
                    C[a * M.dim + b][col] = scale * val
    gens = kernel(C, src_orders, tgt_orders, M.p)
    return [_vars_to_matrix(M, N, variables, u) for u in gens]


def _matrix_key(S: Matrix) -> tuple:
    return tuple(tuple(r) for r in S)


def span_closure(gens: Sequence[Matrix], N: FpModule, limit: int = 200000) -> list[Matrix]:
    """All Z-combinations of ``gens`` (finite target), canonically reduced."""
    if any(e is None for e in N.orders) and gens:
        raise ValueError("span closure needs a finite target")
    if not gens:
        return []
    rows, cols = len(gens[0]), len(gens[0][0]) if gens[0] else 0
    zero = _matrix_key(zeros(rows, cols))
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for key in frontier:
            for g in gens:
                new = _matrix_key(reduce_rows([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(key, g)], N.orders, N.p))
                if new not in seen:
                    seen.add(new)
                    nxt.append(new)
                    if len(seen) > limit:
                        raise ValueError("hom group too large to enumerate")
        frontier = nxt
    return [[list(r) for r in key] for key in sorted(seen)]


def enumerate_plain_homs(M: FpModule, N: FpModule) -> list[Matrix]:
    """Every Z_(p)-map M -> N for a finite target N."""
    if N.free_rank:
        raise ValueError("enumeration needs a finite target")
    variables = _hom_variables(M, N)
    out = [zeros(N.dim, M.dim)]
    pf = Fraction(M.p)
    for (i, j, w, order) in variables:
        new = []
        for S in out:
            for u in range(M.p**order):
                T = [list(r) for r in S]
                T[i][j] = pf**w * u
                new.append(T)
        out = new
    return [reduce_rows(S, N.orders, N.p) for S in out]


# -- corpus generation ------------------------------------------------------


def _rand_plocal(rng: random.Random, lo=-4, hi=4) -> Fraction:
    return Fraction(rng.randint(lo, hi))


def _random_unimodular(rng: random.Random, r: int) -> tuple[Matrix, Matrix]:
    """Integer matrix with det 1 and its inverse (products of elementary matrices)."""
    P, P_inv = identity(r), identity(r)
    for _ in range(2 * r):
        if r < 2:
            break
        i, j = rng.sample(range(r), 2)
        c = Fraction(rng.randint(-2, 2))
        # P <- P (I + c E_ij); P_inv <- (I - c E_ij) P_inv
        for row in P:
            row[j] += c * row[i]
        P_inv[i] = [a - c * b for a, b in zip(P_inv[i], P_inv[j])]
    return P, P_inv


def _random_torsion_entry(rng, cfg, ei, ej, unit_diag=False) -> Fraction:
    p = cfg.p
    w = max(0, ei - ej)
    return Fraction(p) ** w * rng.randint(0, p**ei - 1)


def random_structured_module(cfg: RingConfig, rng: random.Random, max_exp=3, max_rank=4) -> FpModule:
    """A module built to be discrete: node eigenvalues on the free part, triangular torsion part."""
    p = cfg.p
    total = rng.randint(1, max_rank)
    r = rng.randint(0, total)
    s = total - r
    exps = sorted((rng.randint(1, max_exp) for _ in range(s)), reverse=True)
    n = s + r
    T = zeros(n, n)
    # torsion block, upper triangular mod p with diagonal congruent to nodes (units)
    for i in range(s):
        for j in range(s):
            if i == j:
                node = cfg.node(rng.randint(1, cfg.period))
                T[i][j] = node + p * rng.randint(0, p**exps[i])
            elif j > i:
                T[i][j] = _random_torsion_entry(rng, cfg, exps[i], exps[j])
            else:
                T[i][j] = Fraction(p) ** max(1, exps[i] - exps[j]) * rng.randint(0, p**exps[i])
    # free block: conjugate of a diagonal of node values
    if r:
        D = zeros(r, r)
        for i in range(r):
            D[i][i] = Fraction(cfg.base) ** rng.randint(-2, 2)
        P, P_inv = _random_unimodular(rng, r)
        F = mat_mul(mat_mul(P, D), P_inv)
        for i in range(r):
            for j in range(r):
                T[s + i][s + j] = F[i][j]
        for i in range(s):
            for j in range(r):
                T[i][s + j] = Fraction(rng.randint(0, p**exps[i] - 1))
    return validate_module(cfg, exps, r, T)


def random_adversarial_module(cfg: RingConfig, rng: random.Random, max_exp=3, max_rank=4) -> FpModule:
    """Candidates likely to break discreteness: Jordan blocks, foreign eigenvalues,
    non-split or singular reductions mod p, plus unconstrained random actions."""
    p = cfg.p
    kind = rng.choice(["jordan", "foreign", "irreducible", "singular", "random", "random"])
    if kind == "jordan":
        lam = Fraction(cfg.base) ** rng.randint(-1, 1)
        M = validate_module(cfg, [], 2, [[lam, rng.choice([1, p, 2])], [0, lam]])
    elif kind == "foreign":
        lam = rng.choice([Fraction(-1), Fraction(1 + p), Fraction(p), Fraction(cfg.base + p)])
        if lam in {Fraction(cfg.base) ** e for e in range(-3, 4)}:
            lam = Fraction(-1)
        e = rng.randint(1, max_exp)
        M = validate_module(cfg, [e], 1, [[1, rng.randint(0, p)], [0, lam]])
    elif kind == "irreducible":
        # X^2 - a with a a non-residue mod p: no eigenvalues in F_p
        a = next(x for x in range(2, p) if pow(x, (p - 1) // 2, p) == p - 1)
        e = rng.randint(1, max_exp)
        M = validate_module(cfg, [e, e], 0, [[0, a], [1, 0]])
    elif kind == "singular":
        e = rng.randint(1, max_exp)
        M = validate_module(cfg, [e], 0, [[p * rng.randint(0, p**e)]])
    else:
        total = rng.randint(1, max_rank)
        r = rng.randint(0, min(total, 2))
        s = total - r
        exps = sorted((rng.randint(1, max_exp) for _ in range(s)), reverse=True)
        n = s + r
        T = zeros(n, n)
        for i in range(n):
            for j in range(n):
                if j < s:
                    if i < s:
                        T[i][j] = _random_torsion_entry(rng, cfg, exps[i], exps[j])
                else:
                    T[i][j] = _rand_plocal(rng)
        M = validate_module(cfg, exps, r, T)
    return M


def generate_corpus(cfg: RingConfig, size: int = 50, seed: int = 0, max_exp: int = 3, max_rank: int = 4) -> list[FpModule]:
    """Seeded mix of structured (discrete by construction) and adversarial modules."""
    rng = random.Random(seed)
    out = []
    for i in range(size):
        if i % 2 == 0:
            out.append(random_structured_module(cfg, rng, max_exp, max_rank))
        else:
            out.append(random_adversarial_module(cfg, rng, max_exp, max_rank))
    return out
