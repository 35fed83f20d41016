"""The cofree functor U on finitely presented modules and the four-term exact sequence.

An element f of UM is stored through its values m_k = f(Phi_k), which vanish
for k at or above an exclusive bound.  The sequence

    0 -> M --alpha--> UM --beta--> UM --gamma--> M (x) Q -> 0

is computed explicitly, together with the preimage constructions that make
each exactness claim checkable on a finite truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .arith import IntegralityError, format_rational, is_plocal, parse_rational, vp
from .linalg import Matrix, identity, kernel, mat_mul, mat_vec, reduce_rows, solve, zeros
from .modules import (
    Element,
    FpModule,
    NotDiscreteError,
    annihilation_exponent,
    is_hom,
    is_plain_hom,
    require_exponent,
    validate_module,
)
from .opring import (
    PhiVector,
    TruncationMismatch,
    punctured_value,
    quotient_poly,
    structure_constant,
    theta_poly,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, eq=False)
class UElement:
    """Finitely supported sequence k -> f(Phi_k) in M; entries at k >= bound are zero."""

    module: FpModule
    entries: tuple  # ((k, Element), ...) sorted, nonzero only
    bound: int

    @classmethod
    def build(cls, M: FpModule, values: Mapping[int, Sequence] | Iterable, bound: int | None = None) -> "UElement":
        items = values.items() if isinstance(values, Mapping) else values
        clean = {}
        for k, v in items:
            if k < 0:
                raise ValueError("support indices must be nonnegative")
            e = M.reduce([Fraction(x) for x in v])
            if not M.is_zero(e):
                clean[k] = e
        top = max(clean, default=-1) + 1
        if bound is None:
            bound = top
        elif bound < top:
            raise ValueError(f"entry at {top - 1} lies beyond the bound {bound}")
        return cls(M, tuple(sorted(clean.items())), bound)

    @classmethod
    def zero(cls, M: FpModule) -> "UElement":
        return cls(M, (), 0)

    def __getitem__(self, k: int) -> Element:
        for j, v in self.entries:
            if j == k:
                return v
        return self.module.zero()

    def as_dict(self) -> dict[int, Element]:
        return dict(self.entries)

    @property
    def support(self) -> list[int]:
        return [k for k, _ in self.entries]

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, UElement):
            return NotImplemented
        return self.module == other.module and self.entries == other.entries

    def __hash__(self):
        return hash((self.module, self.entries))

    def __add__(self, other: "UElement") -> "UElement":
        d = self.as_dict()
        for k, v in other.entries:
            d[k] = self.module.add(d.get(k, self.module.zero()), v)
        return UElement.build(self.module, d, max(self.bound, other.bound))

    def scale(self, c) -> "UElement":
        return UElement.build(self.module, {k: self.module.scale(c, v) for k, v in self.entries}, self.bound)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other: "UElement") -> "UElement":
        return self + (-other)

    def to_json(self) -> dict:
        return {"support": [[k, [format_rational(x) for x in v]] for k, v in self.entries]}

    @classmethod
    def from_json(cls, M: FpModule, data: Mapping) -> "UElement":
        return cls.build(M, {int(k): [parse_rational(x) for x in v] for k, v in data.get("support", [])})

    def __repr__(self):
        body = ", ".join(f"{k}: [{', '.join(format_rational(x) for x in v)}]" for k, v in self.entries)
        return f"UElement({{{body}}}, bound={self.bound})"


def rho(M: FpModule, k: int, x) -> UElement:
    """The element with value x at Phi_k and zero elsewhere."""
    return UElement.build(M, {k: M.element(x)}, k + 1)


# -- the A-action on UM -----------------------------------------------------


def u_action(theta: PhiVector, f: UElement) -> UElement:
    """(theta f)(Phi_k) = f(Phi_k theta)."""
    M = f.module
    if theta.truncation < f.bound:
        raise TruncationMismatch(f"operation truncated at {theta.truncation} < support bound {f.bound}")
    out: dict[int, list] = {}
    for m, vm in f.entries:
        for k in range(m + 1):
            coeff = ZERO
            for j in range(m + 1):
                tj = theta.coeffs[j]
                if tj:
                    c = structure_constant(k, j, m, M.cfg)
                    if c:
                        coeff += tj * c
            if coeff:
                acc = out.setdefault(k, [ZERO] * M.dim)
                for i, x in enumerate(vm):
                    acc[i] += coeff * x
    return UElement.build(M, out, f.bound)


def psi_action(f: UElement) -> UElement:
    """Psi^q on UM: k -> m_{k+1} + q_{k+1} m_k."""
    M = f.module
    d = f.as_dict()
    out = {}
    for k in range(f.bound):
        nxt = d.get(k + 1, M.zero())
        cur = d.get(k, M.zero())
        out[k] = [a + M.cfg.node(k + 1) * b for a, b in zip(nxt, cur)]
    return UElement.build(M, out, f.bound)


# -- the sequence maps ------------------------------------------------------


def alpha(M: FpModule, x, bound: int | None = None) -> UElement:
    """Adjoint of the identity: k -> Theta_k(T) x."""
    n = require_exponent(M)
    v = M.element(x)
    out = {}
    for k in range(n):
        if k > 0:
            v = M.apply_linear(v, M.cfg.node(k))
        out[k] = v
    return UElement.build(M, out, max(n, bound or 0))


def beta(M: FpModule, f: UElement) -> UElement:
    """Psi^q o f - f o Psi^q: k -> (T - q_{k+1}) m_k - m_{k+1}."""
    d = f.as_dict()
    out = {}
    for k in range(f.bound):
        cur = d.get(k, M.zero())
        nxt = d.get(k + 1, M.zero())
        w = M.apply_linear(cur, M.cfg.node(k + 1))
        out[k] = [a - b for a, b in zip(w, nxt)]
    return UElement.build(M, out, f.bound)


def _free_part(M: FpModule, v) -> list[Fraction]:
    return list(v[M.ntors:])


def _free_block(M: FpModule) -> Matrix:
    s = M.ntors
    return [list(row[s:]) for row in M.action[s:]]


def _apply_punctured_q(T: Matrix, n: int, j: int, v: list[Fraction], cfg) -> list[Fraction]:
    """Theta_n^{(j)}(T) v over Q."""
    for i in range(1, n + 1):
        if i != j:
            qi = cfg.node(i)
            tv = mat_vec(T, v)
            v = [a - qi * b for a, b in zip(tv, v)]
    return v


def admissible_n(M: FpModule, f: UElement) -> int:
    return max(f.bound, require_exponent(M), 1)


def gamma(M: FpModule, f: UElement, n: int | None = None) -> tuple[Fraction, ...]:
    """gamma f in M (x) Q, as coordinates on the free block."""
    ann = require_exponent(M)
    if n is None:
        n = admissible_n(M, f)
    elif n < max(f.bound, ann, 1):
        raise ValueError(f"n={n} is not admissible (needs >= {max(f.bound, ann, 1)})")
    r = M.free_rank
    if r == 0:
        return ()
    T = _free_block(M)
    cfg = M.cfg
    total = [ZERO] * r
    for j in range(1, n + 1):
        qj = cfg.node(j)
        acc = [ZERO] * r
        for k, v in f.entries:
            if k + 1 < j:
                continue
            w = _free_part(M, v)
            c = 1 / punctured_value(k + 1, j, qj, cfg)
            acc = [a + c * b for a, b in zip(acc, w)]
        if any(acc):
            acc = _apply_punctured_q(T, n, j, acc, cfg)
            c = 1 / punctured_value(n, j, qj, cfg)
            total = [a + c * b for a, b in zip(total, acc)]
    return tuple(total)


def gamma_preimage(M: FpModule, x: Sequence, n: int | None = None) -> tuple[UElement, Fraction]:
    """(f, d) with gamma f = d x and d a power of p."""
    p, r, cfg = M.p, M.free_rank, M.cfg
    x = [Fraction(c) for c in x]
    if len(x) != r:
        raise ValueError(f"vector has {len(x)} coordinates, M (x) Q has dimension {r}")
    if not any(x):
        return UElement.zero(M), ONE
    n = max(require_exponent(M), 1) if n is None else n
    # scale x to a p-integral vector
    s = max(0, -min(vp(c, p) for c in x if c))
    xs = [c * Fraction(p) ** s for c in x]
    T = _free_block(M)
    denoms = [punctured_value(n, j, cfg.node(j), cfg) for j in range(1, n + 1)]
    a = max(vp(c, p) for c in denoms)
    a = max(a, 0)
    d = Fraction(p) ** a
    out = {}
    for k in range(n):
        j = k + 1
        coeff = d * punctured_value(j, j, cfg.node(j), cfg) / denoms[k]
        y = _apply_punctured_q(T, n, j, xs, cfg)
        vals = [coeff * c for c in y]
        if any(not is_plocal(c, p) for c in vals):
            raise IntegralityError(f"gamma preimage entry at {k} is not {p}-integral")
        out[k] = [ZERO] * M.ntors + vals
    return UElement.build(M, out, n), d * Fraction(p) ** s


def p_reduce(M: FpModule, f: UElement) -> UElement:
    """g with gamma(f - p g) = 0, using the quotient congruence for Theta_{k+1}/Theta_{k-m+1}."""
    if f.is_zero():
        return UElement.zero(M)
    p, cfg, period = M.p, M.cfg, M.cfg.period
    need = max(f.bound, require_exponent(M), 1)
    m = -(-need // period) * period
    theta_m = theta_poly(m, cfg)
    out = {}
    for i, v in f.entries:
        k = i + m
        diff = quotient_poly(k + 1, k - m + 1, cfg) - theta_m
        scaled = diff * Fraction(1, p)
        if not scaled.is_plocal(p):
            raise IntegralityError(f"(Theta_{k + 1}/Theta_{k - m + 1} - Theta_{m}) is not divisible by {p}")
        out[k] = M.apply_poly(scaled, v)
    g = UElement.build(M, out, f.bound + m)
    residual = gamma(M, f - g.scale(p))
    if any(residual):
        raise IntegralityError("p-reduction left a nonzero gamma value")
    return g


def torsion_witness(M: FpModule, f: UElement, n: int | None = None) -> Element:
    """sum_i (Theta_n/Theta_{i+1})(T) f(Phi_i)."""
    n = admissible_n(M, f) if n is None else n
    acc = M.zero()
    for i, v in f.entries:
        acc = M.add(acc, M.apply_theta_range(v, i + 1, n))
    return acc


@dataclass
class BetaPreimage:
    g: UElement
    r: int
    witness: Element


def beta_preimage(M: FpModule, f: UElement, search_limit: int | None = None) -> BetaPreimage:
    """g with beta(g) = -f for f in the kernel of gamma.

    g(Phi_k) = sum_{i<k} (Theta_k/Theta_{i+1})(T) f(Phi_i), truncated once it
    vanishes; r is the last index where g may be nonzero.
    """
    if any(gamma(M, f)):
        raise ValueError("f is not in the kernel of gamma")
    n = admissible_n(M, f)
    y = torsion_witness(M, f, n)
    if any(y[M.ntors:]):
        raise IntegralityError("torsion witness has a nonzero free part")
    period = M.cfg.period
    if search_limit is None:
        # the quotient congruence kills y once p^{1+vp(r+1-n)} reaches the torsion exponent
        search_limit = n + period * M.p ** max(M.max_exponent - 1, 0) * max(1, -(-n // period)) + period
    d = f.as_dict()
    g = {}
    cur = M.zero()
    k = 0
    while True:
        # cur = g(Phi_k)
        if k >= n and M.is_zero(cur):
            return BetaPreimage(UElement.build(M, g), k - 1, y)
        if k > search_limit:
            raise ArithmeticError(f"no beta preimage with support below {search_limit}")
        g[k] = cur
        nxt = M.apply_linear(cur, M.cfg.node(k + 1))
        cur = M.add(nxt, d.get(k, M.zero()))
        k += 1


# -- truncated cofree modules and the adjunction ----------------------------


@dataclass(frozen=True)
class CofreeTruncation:
    """U_{<n} M as an FpModule; torsion coordinates of every block come first."""

    base: FpModule
    n: int
    module: FpModule

    def index(self, k: int, i: int) -> int:
        s, r = self.base.ntors, self.base.free_rank
        if i < s:
            return k * s + i
        return self.n * s + k * r + (i - s)

    def to_vector(self, f: UElement) -> Element:
        if f.bound > self.n:
            raise ValueError(f"support bound {f.bound} exceeds truncation {self.n}")
        v = [ZERO] * self.module.dim
        for k, m in f.entries:
            for i, x in enumerate(m):
                v[self.index(k, i)] = x
        return tuple(v)

    def from_vector(self, v) -> UElement:
        out = {}
        for k in range(self.n):
            out[k] = [v[self.index(k, i)] for i in range(self.base.dim)]
        return UElement.build(self.base, out, self.n)


def cofree_truncation(M: FpModule, n: int) -> CofreeTruncation:
    s, r = M.ntors, M.free_rank
    layout = CofreeTruncation(M, n, None)  # type: ignore[arg-type]
    dim = n * M.dim
    T = zeros(dim, dim)
    for k in range(n):
        for i in range(M.dim):
            row = layout.index(k, i)
            T[row][layout.index(k, i)] += M.cfg.node(k + 1)
            if k + 1 < n:
                T[row][layout.index(k + 1, i)] += ONE
    exps = [e for _ in range(n) for e in M.torsion_exponents]
    module = validate_module(M.cfg, exps, n * r, T)
    return CofreeTruncation(M, n, module)


def transpose_from(h: Matrix, N: FpModule, U: CofreeTruncation) -> Matrix:
    """Plain hom h: N -> M to the A-hom N -> U_{<n} M, x -> (k -> h Theta_k(T_N) x)."""
    M = U.base
    if not is_plain_hom(N, M, h):
        raise ValueError("h is not a well-defined map N -> M")
    ann = require_exponent(N)
    if U.n < ann:
        raise ValueError(f"truncation {U.n} is below the annihilation exponent {ann} of N")
    G = zeros(U.module.dim, N.dim)
    Tk = identity(N.dim)
    TN = N.matrix()
    for k in range(U.n):
        if k > 0:
            qk = N.cfg.node(k)
            shifted = [[TN[i][j] - (qk if i == j else ZERO) for j in range(N.dim)] for i in range(N.dim)]
            Tk = reduce_rows(mat_mul(Tk, shifted), N.orders, N.p)
        block = mat_mul(h, Tk)
        for i in range(M.dim):
            G[U.index(k, i)] = list(block[i])
    return reduce_rows(G, U.module.orders, N.p)


def transpose_to(G: Matrix, U: CofreeTruncation) -> Matrix:
    """A-hom N -> U_{<n} M to the plain hom x -> G(x)(Phi_0)."""
    M = U.base
    return reduce_rows([list(G[U.index(0, i)]) for i in range(M.dim)], M.orders, M.p)


def unit_map(M: FpModule, U: CofreeTruncation) -> Matrix:
    """alpha as a matrix M -> U_{<n} M."""
    return transpose_from(identity(M.dim), M, U)


def u_map(e: Matrix, f: UElement, target: FpModule) -> UElement:
    """U(e) f = e o f."""
    return UElement.build(target, {k: mat_vec(e, v) for k, v in f.entries}, f.bound)


def is_surjective(e: Matrix, L1: FpModule, L2: FpModule) -> bool:
    for b in L2.basis():
        if solve(e, list(b), L2.orders, L2.p, L1.dim) is None:
            return False
    return True


def lift_through_epi(e: Matrix, L1: FpModule, L2: FpModule, g: UElement) -> UElement:
    """h in U L1 with U(e) h = g, choosing a preimage entry by entry."""
    if not is_plain_hom(L1, L2, e):
        raise ValueError("e is not a well-defined map")
    if not is_surjective(e, L1, L2):
        raise ValueError("e is not surjective")
    out = {}
    for k, v in g.entries:
        y = solve(e, list(v), L2.orders, L2.p, L1.dim)
        if y is None:
            raise ArithmeticError(f"no preimage for the entry at {k}")
        out[k] = L1.reduce(y)
    return UElement.build(L1, out, g.bound)


# -- exactness --------------------------------------------------------------


def _truncated_basis(M: FpModule, S: int) -> list[UElement]:
    out = []
    for k in range(S):
        for b in M.basis():
            out.append(UElement.build(M, {k: b}, S))
    return out


def _block_vector(f: UElement, M: FpModule, S: int) -> list[Fraction]:
    v = [ZERO] * (S * M.dim)
    for k, m in f.entries:
        v[k * M.dim:(k + 1) * M.dim] = list(m)
    return v


def _from_block(v, M: FpModule, S: int) -> UElement:
    return UElement.build(M, {k: v[k * M.dim:(k + 1) * M.dim] for k in range(S)}, S)


@dataclass
class ExactSequenceReport:
    support: int
    clauses: dict[str, bool] = field(default_factory=dict)
    details: dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.clauses.values())

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "support": self.support,
            "clauses": dict(self.clauses),
            "details": self.details,
        }


def default_support(M: FpModule) -> int:
    return require_exponent(M) + 2 * M.cfg.period


def verify_exact_sequence(M: FpModule, S: int | None = None) -> ExactSequenceReport:
    """Check each exactness claim on the elements supported below S."""
    ann = require_exponent(M)
    S = default_support(M) if S is None else S
    if S < ann:
        raise ValueError(f"support {S} is below the annihilation exponent {ann}")
    rep = ExactSequenceReport(S)
    orders = [e for _ in range(S) for e in M.orders]
    p = M.p

    # alpha injective: kernel of x -> (Theta_k(T) x)_k
    cols = [_block_vector(alpha(M, b, S), M, S) for b in M.basis()]
    A = [list(r) for r in zip(*cols)] if cols else []
    ker_alpha = kernel(A, M.orders, orders, p) if M.dim else []
    rep.clauses["alpha_injective"] = not ker_alpha

    rep.clauses["beta_alpha_zero"] = all(beta(M, alpha(M, b, S)).is_zero() for b in M.basis())

    # Ker beta inside Im alpha on the truncation
    basis = _truncated_basis(M, S)
    bcols = [_block_vector(beta(M, f), M, S) for f in basis]
    B = [list(r) for r in zip(*bcols)] if bcols else []
    ker_beta = kernel(B, orders, orders, p) if basis else []
    ok = True
    for v in ker_beta:
        f = _from_block(v, M, S)
        if f != alpha(M, f[0], S):
            ok = False
            break
    rep.clauses["ker_beta_in_im_alpha"] = ok
    rep.details["ker_beta_generators"] = len(ker_beta)

    rep.clauses["gamma_beta_zero"] = all(not any(gamma(M, beta(M, f))) for f in basis)

    # Ker gamma inside Im beta
    r = M.free_rank
    if r and basis:
        gcols = [list(gamma(M, f, max(S, ann, 1))) for f in basis]
        G = [list(row) for row in zip(*gcols)]
        ker_gamma = [_from_block(v, M, S) for v in kernel(G, orders, [None] * r, p)]
    else:
        ker_gamma = basis
    ok = True
    max_r = -1
    for f in ker_gamma:
        try:
            pre = beta_preimage(M, f)
        except (ArithmeticError, ValueError):
            ok = False
            break
        if beta(M, pre.g) != -f:
            ok = False
            break
        max_r = max(max_r, pre.r)
    rep.clauses["ker_gamma_in_im_beta"] = ok
    rep.details["ker_gamma_generators"] = len(ker_gamma)
    rep.details["largest_preimage_r"] = max_r

    # gamma surjective onto M (x) Q
    ok = True
    scalars = []
    for i in range(r):
        x = [ONE if j == i else ZERO for j in range(r)]
        try:
            f, d = gamma_preimage(M, x)
            steps = vp(d, p)
            for _ in range(steps):
                f = p_reduce(M, f)
        except (ArithmeticError, ValueError):
            ok = False
            break
        if list(gamma(M, f)) != x:
            ok = False
            break
        scalars.append(format_rational(d))
    rep.clauses["gamma_surjective"] = ok
    rep.details["gamma_preimage_scalars"] = scalars
    return rep
