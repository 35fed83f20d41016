"""Arithmetic in the ring of degree-zero operations, truncated in the Phi basis.

Elements of Z_(p)[Psi^q] are :class:`OperationPoly` (dense coefficients in
powers of X = Psi^q).  Cosets of A/A_N are :class:`PhiVector` (coefficients
on Phi_0, ..., Phi_{N-1}, where Phi_n = Theta_n(Psi^q)).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .arith import (
    INF,
    IntegralityError,
    RingConfig,
    as_fraction,
    format_rational,
    gaussian_binomial,
    is_plocal,
    parse_rational,
    reduce_mod,
    vp,
)
from .linalg import rref_mod_p

ZERO = Fraction(0)
ONE = Fraction(1)


class NotAUnitError(ValueError):
    pass


class TruncationMismatch(ValueError):
    pass


class AbcongError(ArithmeticError):
    """The truncated congruence system is inconsistent or not triangularly determined."""


def _trim(coeffs: Iterable[Fraction]) -> tuple[Fraction, ...]:
    c = [as_fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class OperationPoly:
    """Polynomial in X = Psi^q; ``coeffs[i]`` multiplies X**i."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @classmethod
    def constant(cls, c) -> "OperationPoly":
        return cls((as_fraction(c),))

    @classmethod
    def x(cls) -> "OperationPoly":
        return cls((ZERO, ONE))

    @classmethod
    def from_roots(cls, roots: Iterable[Fraction]) -> "OperationPoly":
        c = [ONE]
        for r in roots:
            new = [ZERO] * (len(c) + 1)
            for i, a in enumerate(c):
                new[i + 1] += a
                new[i] -= r * a
            c = new
        return cls(tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else ZERO

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return OperationPoly(tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    __radd__ = __add__

    def __neg__(self):
        return OperationPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if not isinstance(other, OperationPoly):
            s = as_fraction(other)
            return OperationPoly(tuple(c * s for c in self.coeffs))
        if self.is_zero() or other.is_zero():
            return OperationPoly()
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return OperationPoly(tuple(out))

    __rmul__ = __mul__

    def __call__(self, x) -> Fraction:
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def divmod(self, other: "OperationPoly") -> tuple["OperationPoly", "OperationPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        lead = other.coeffs[-1]
        d = other.degree
        quot = [ZERO] * max(0, len(rem) - d)
        for i in range(len(rem) - 1, d - 1, -1):
            c = rem[i] / lead
            quot[i - d] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[i - d + j] -= c * b
        return OperationPoly(tuple(quot)), OperationPoly(tuple(rem[:d]))

    def is_plocal(self, p: int) -> bool:
        return all(is_plocal(c, p) for c in self.coeffs)

    def __repr__(self):
        return f"OperationPoly({[format_rational(c) for c in self.coeffs]})"


def _as_poly(x) -> OperationPoly:
    return x if isinstance(x, OperationPoly) else OperationPoly.constant(x)


@dataclass(frozen=True)
class PhiVector:
    """Coset sum(a_k Phi_k) + A_N with p-local coefficients."""

    coeffs: tuple[Fraction, ...]
    cfg: RingConfig = field(compare=False, repr=False)

    def __post_init__(self):
        c = tuple(as_fraction(x) for x in self.coeffs)
        if not c:
            raise ValueError("truncation must be positive")
        for x in c:
            if not is_plocal(x, self.cfg.p):
                raise IntegralityError(f"Phi coefficient {x} is not {self.cfg.p}-local")
        object.__setattr__(self, "coeffs", c)

    @property
    def truncation(self) -> int:
        return len(self.coeffs)

    @classmethod
    def basis(cls, n: int, N: int, cfg: RingConfig) -> "PhiVector":
        """Phi_n modulo A_N (zero when n >= N)."""
        return cls(tuple(ONE if k == n else ZERO for k in range(N)), cfg)

    @classmethod
    def zero(cls, N: int, cfg: RingConfig) -> "PhiVector":
        return cls((ZERO,) * N, cfg)

    def _check(self, other: "PhiVector"):
        if self.truncation != other.truncation:
            raise TruncationMismatch(f"truncations {self.truncation} and {other.truncation} differ")

    def __add__(self, other: "PhiVector") -> "PhiVector":
        self._check(other)
        return PhiVector(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.cfg)

    def __sub__(self, other: "PhiVector") -> "PhiVector":
        self._check(other)
        return PhiVector(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.cfg)

    def __neg__(self):
        return PhiVector(tuple(-a for a in self.coeffs), self.cfg)

    def scale(self, s) -> "PhiVector":
        s = as_fraction(s)
        return PhiVector(tuple(a * s for a in self.coeffs), self.cfg)

    def __mul__(self, other: "PhiVector") -> "PhiVector":
        return multiply(self, other)

    def to_json(self) -> dict:
        return {"truncation": self.truncation, "coeffs": [format_rational(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: Mapping, cfg: RingConfig) -> "PhiVector":
        coeffs = tuple(parse_rational(c) for c in data["coeffs"])
        n = int(data.get("truncation", len(coeffs)))
        if n != len(coeffs):
            raise ValueError(f"truncation {n} does not match {len(coeffs)} coefficients")
        return cls(coeffs, cfg)


# -- Theta polynomials ------------------------------------------------------


@lru_cache(maxsize=None)
def _theta(cfg: RingConfig, n: int) -> OperationPoly:
    if n == 0:
        return OperationPoly.constant(1)
    return _theta(cfg, n - 1) * OperationPoly((-cfg.node(n), ONE))


def theta_poly(n: int, cfg: RingConfig) -> OperationPoly:
    """Theta_n(X) = prod_{i=1}^{n} (X - q_i)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _theta(cfg, n)


def theta_poly_punctured(n: int, j: int, cfg: RingConfig) -> OperationPoly:
    """Theta_n with the factor (X - q_j) removed."""
    if not 1 <= j <= n:
        raise ValueError(f"puncture index j={j} outside 1..{n}")
    return OperationPoly.from_roots(cfg.node(i) for i in range(1, n + 1) if i != j)


def theta_value(n: int, x, cfg: RingConfig) -> Fraction:
    acc = ONE
    for i in range(1, n + 1):
        acc *= x - cfg.node(i)
    return acc


def punctured_value(n: int, j: int, x, cfg: RingConfig) -> Fraction:
    """Theta_n^{(j)}(x); equal to Theta_n(x) when j > n."""
    acc = ONE
    for i in range(1, n + 1):
        if i != j:
            acc *= x - cfg.node(i)
    return acc


# -- basis change -----------------------------------------------------------


def _synthetic_division(coeffs: list[Fraction], r: Fraction) -> tuple[list[Fraction], Fraction]:
    """Divide by (X - r): returns (quotient, remainder)."""
    if not coeffs:
        return [], ZERO
    out = [ZERO] * (len(coeffs) - 1)
    acc = ZERO
    for i in range(len(coeffs) - 1, -1, -1):
        acc = acc * r + coeffs[i]
        if i > 0:
            out[i - 1] = acc
    return out, acc


def poly_coefficients_in_phi(f: OperationPoly, cfg: RingConfig) -> list[Fraction]:
    """Exact Phi-coefficients of ``f`` (length deg+1), by repeated synthetic division."""
    coeffs = list(f.coeffs)
    out: list[Fraction] = []
    i = 1
    while coeffs:
        coeffs, rem = _synthetic_division(coeffs, cfg.node(i))
        out.append(rem)
        i += 1
    return out or [ZERO]


def poly_to_phi(f: OperationPoly, cfg: RingConfig, N: int | None = None) -> PhiVector:
    """Phi-expansion of ``f``; truncated or zero-padded to ``N`` when given."""
    a = poly_coefficients_in_phi(f, cfg)
    if N is not None:
        a = (a + [ZERO] * N)[:N]
    return PhiVector(tuple(a), cfg)


def phi_to_poly(a: PhiVector, cfg: RingConfig | None = None) -> OperationPoly:
    """Canonical polynomial representative sum(a_k Theta_k) of degree < N."""
    cfg = cfg or a.cfg
    out = OperationPoly()
    for k, c in enumerate(a.coeffs):
        if c:
            out = out + theta_poly(k, cfg) * c
    return out


# -- structure constants ----------------------------------------------------


@lru_cache(maxsize=None)
def _structure_row(cfg: RingConfig, j: int, n: int) -> tuple[Fraction, ...]:
    """Coefficients (c^k_{j,n})_{k=0..j+n} of Phi_j Phi_n, by recursion in n."""
    if n == 0:
        return tuple(ONE if k == j else ZERO for k in range(j + 1))
    prev = _structure_row(cfg, j, n - 1)
    qn = cfg.node(n)
    row = [ZERO] * (j + n + 1)
    for k in range(j + n + 1):
        v = ZERO
        if k < len(prev) and prev[k]:
            v += (cfg.node(k + 1) - qn) * prev[k]
        if 1 <= k <= len(prev) and prev[k - 1]:
            v += prev[k - 1]
        row[k] = v
    return tuple(row)


def structure_constant(j: int, n: int, k: int, cfg: RingConfig) -> Fraction:
    """Coefficient of Phi_k in Phi_j Phi_n."""
    if min(j, n, k) < 0:
        raise ValueError("indices must be nonnegative")
    row = _structure_row(cfg, j, n)
    return row[k] if k < len(row) else ZERO


def multiply(a: PhiVector, b: PhiVector) -> PhiVector:
    """Product of cosets in A/A_N."""
    if a.truncation != b.truncation:
        raise TruncationMismatch(f"truncations {a.truncation} and {b.truncation} differ")
    cfg = a.cfg
    N = a.truncation
    out = [ZERO] * N
    for j, x in enumerate(a.coeffs):
        if not x:
            continue
        for n, y in enumerate(b.coeffs):
            if not y:
                continue
            xy = x * y
            row = _structure_row(cfg, j, n)
            # c^k_{j,n} = 0 for k < max(j, n)
            for k in range(max(j, n), min(N, len(row))):
                if row[k]:
                    out[k] += xy * row[k]
    return PhiVector(tuple(out), cfg)


def psi_q(N: int, cfg: RingConfig) -> PhiVector:
    """Psi^q = Phi_0 + Phi_1."""
    return poly_to_phi(OperationPoly.x(), cfg, N)


# -- Adams operations -------------------------------------------------------


def adams_coefficients(j, N: int, cfg: RingConfig) -> list[Fraction]:
    """g_0(j), ..., g_{N-1}(j) by triangular (Newton) interpolation at the nodes."""
    j = as_fraction(j)
    if j == 0 or vp(j, cfg.p) != 0:
        raise NotAUnitError(f"Psi^{format_rational(j)} is not defined: {j} is not a {cfg.p}-local unit")
    w = cfg.adams_weight(j)
    g: list[Fraction] = []
    for m in range(1, N + 1):
        qm = cfg.node(m)
        target = w ** cfg.exponent(m)
        acc = ZERO
        theta = ONE  # Theta_i(q_m), built incrementally
        for i in range(m - 1):
            acc += g[i] * theta
            theta *= qm - cfg.node(i + 1)
        g.append((target - acc) / theta)
    return g


def adams_expansion(j, N: int, cfg: RingConfig) -> PhiVector:
    """Psi^j modulo A_N in the Phi basis."""
    g = adams_coefficients(j, N, cfg)
    for i, c in enumerate(g):
        if not is_plocal(c, cfg.p):
            raise IntegralityError(f"g_{i}({j}) = {c} is not {cfg.p}-local")
    return PhiVector(tuple(g), cfg)


# -- quotients and units ----------------------------------------------------


def divide_phi(n: int, m: int, cfg: RingConfig) -> OperationPoly:
    """The polynomial Theta_n / Theta_m (exact division)."""
    if not n > m >= 0:
        raise ValueError(f"need n > m >= 0, got n={n}, m={m}")
    quot, rem = theta_poly(n, cfg).divmod(theta_poly(m, cfg))
    if not rem.is_zero():
        raise IntegralityError(f"Theta_{m} does not divide Theta_{n}")
    return quot


def quotient_poly(n: int, m: int, cfg: RingConfig) -> OperationPoly:
    """Theta_n / Theta_m as the product of the factors (X - q_i), m < i <= n."""
    return OperationPoly.from_roots(cfg.node(i) for i in range(m + 1, n + 1))


def is_unit(f: OperationPoly, cfg: RingConfig, periods: int = 1) -> bool:
    """Whether f(Psi^q) is a unit of A.

    Checks f(q_i) over ``periods`` full residue periods of the node sequence;
    one period suffices since the valuation only depends on q_i mod p.
    """
    return all(vp(f(cfg.node(i)), cfg.p) == 0 for i in range(1, cfg.period * periods + 1))


def augmentation(a: PhiVector) -> Fraction:
    return a.coeffs[0]


def filtration_order(a: PhiVector) -> int:
    """Least k with a_k != 0, or the truncation for the zero coset."""
    for k, c in enumerate(a.coeffs):
        if c:
            return k
    return a.truncation


# -- the divisibility congruences -------------------------------------------


@dataclass
class AbcongSolution:
    n: int
    K: int
    residues: dict[int, int]
    rank: int
    unknowns: int
    guaranteed: list[int]

    @property
    def determined(self) -> list[int]:
        return sorted(self.residues)


def _abcong_rows(n: int, K: int, cfg: RingConfig) -> list[list[int]]:
    p = cfg.p
    rows = []
    for k in range(n, K + 1):
        rows.append([reduce_mod(structure_constant(j, n, k, cfg), p, 1) if k - n <= j <= k else 0 for j in range(K + 1)])
    return rows


def solve_abcongs(a: Sequence | Mapping[int, object], n: int, cfg: RingConfig) -> AbcongSolution:
    """Solve sum_{j=k-n}^{k} c^k_{j,n} b_j = a_k (mod p) for n <= k <= K.

    ``a`` is either a mapping k -> a_k or a sequence (a_n, ..., a_K).  Only the
    unknowns b_j that the finite window pins down uniquely are returned; the
    window always determines b_0 .. b_{Ps-1} for the largest s with
    Ps + n - 1 <= K (P the node period), and an error is raised otherwise.
    """
    if isinstance(a, Mapping):
        K = max(a)
        values = {k: as_fraction(a[k]) for k in a}
    else:
        K = n + len(a) - 1
        values = {n + i: as_fraction(x) for i, x in enumerate(a)}
    if K < n:
        raise ValueError("window must contain at least one congruence")
    p = cfg.p
    rows = _abcong_rows(n, K, cfg)
    aug = [row + [reduce_mod(values.get(k, 0), p, 1)] for row, k in zip(rows, range(n, K + 1))]
    red, pivots = rref_mod_p(aug, p)
    nvars = K + 1
    if nvars in pivots:
        raise AbcongError("congruence system is inconsistent")
    free = set(range(nvars)) - set(pivots)
    residues = {}
    for r, c in enumerate(pivots):
        if all(red[r][f] == 0 for f in free):
            residues[c] = red[r][nvars]
    P = cfg.period
    s = (K - n + 1) // P
    guaranteed = list(range(P * s)) if s >= 1 else []
    missing = [j for j in guaranteed if j not in residues]
    if missing:
        raise AbcongError(f"unknowns {missing} are not determined by the window")
    return AbcongSolution(n, K, residues, len(pivots), nvars, guaranteed)


def check_abcongs(solution: AbcongSolution, a, cfg: RingConfig) -> bool:
    """Re-substitute: some extension of the determined residues satisfies every congruence."""
    n, K, p = solution.n, solution.K, cfg.p
    if isinstance(a, Mapping):
        values = {k: as_fraction(a[k]) for k in a}
    else:
        values = {n + i: as_fraction(x) for i, x in enumerate(a)}
    rows = _abcong_rows(n, K, cfg)
    # Fix the determined unknowns and check the remaining system is solvable.
    fixed = solution.residues
    free_vars = [j for j in range(K + 1) if j not in fixed]
    reduced = []
    for row, k in zip(rows, range(n, K + 1)):
        rhs = (reduce_mod(values.get(k, 0), p, 1) - sum(row[j] * b for j, b in fixed.items())) % p
        reduced.append([row[j] for j in free_vars] + [rhs])
    if not free_vars:
        return all(r[-1] == 0 for r in reduced)
    red, pivots = rref_mod_p(reduced, p)
    return len(free_vars) not in pivots


# -- identity checks --------------------------------------------------------


@dataclass
class Instance:
    params: dict
    passed: bool
    detail: str = ""


@dataclass
class IdentityReport:
    kind: str
    instances: list[Instance] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.instances)

    @property
    def failures(self) -> list[Instance]:
        return [i for i in self.instances if not i.passed]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "instances": len(self.instances),
            "failures": [dict(i.params, detail=i.detail) for i in self.failures],
        }


def check_ccong(cfg: RingConfig, s_max: int, n_max: int) -> IdentityReport:
    report = IdentityReport("ccong")
    P, p = cfg.period, cfg.p
    for s in range(1, s_max + 1):
        for n in range(1, n_max + 1):
            for j in range(P * s, P * s + n):
                for k in range(j, P * s + n):
                    c = structure_constant(j, n, k, cfg)
                    ok = reduce_mod(c, p, 1) == 0
                    report.instances.append(Instance({"s": s, "j": j, "n": n, "k": k}, ok, "" if ok else format_rational(c)))
    return report


def check_phi_quotient(cfg: RingConfig, n_max: int, step: int | None = None) -> IdentityReport:
    """Phi-coefficients of Theta_n/Theta_m - Theta_{n-m} have valuation >= 1 + vp(n-m)."""
    report = IdentityReport("phi_quotient")
    step = step or cfg.period
    p = cfg.p
    for n in range(1, n_max + 1):
        for m in range(n - step, -1, -step):
            d = n - m
            coeffs = poly_coefficients_in_phi(divide_phi(n, m, cfg), cfg)
            coeffs[d] -= 1
            need = 1 + vp(d, p)
            worst = min((vp(c, p) for c in coeffs), default=INF)
            ok = worst >= need
            report.instances.append(Instance({"n": n, "m": m}, ok, f"min valuation {worst}, need {need}"))
    return report


def check_theta_power(cfg: RingConfig, k: int) -> IdentityReport:
    """Theta_N(X) = X^N - 1 coefficientwise mod p, N = p^k(p-1) (p^k in the split ring)."""
    report = IdentityReport("theta_power")
    N = cfg.theta_power_index(k)
    diff = theta_poly(N, cfg) - _monomial(N) + 1
    bad = [i for i, c in enumerate(diff.coeffs) if c and vp(c, cfg.p) < 1]
    report.instances.append(
        Instance(
            {"k": k, "index": N},
            not bad,
            f"Theta_{N} = X^{N} - 1 mod {cfg.p}" if not bad else f"coefficients {bad} not divisible by {cfg.p}",
        )
    )
    return report


def check_qbinomial(cfg: RingConfig, k: int) -> IdentityReport:
    report = IdentityReport("qbinomial")
    N = cfg.theta_power_index(k)
    for j in range(1, N):
        g = gaussian_binomial(N, j, cfg)
        ok = vp(g, cfg.p) >= 1
        report.instances.append(Instance({"n": N, "j": j}, ok))
    return report


def check_symmetry(cfg: RingConfig, bound: int) -> IdentityReport:
    report = IdentityReport("symmetry")
    for j in range(bound + 1):
        for n in range(j + 1, bound + 1):
            for k in range(max(j, n), j + n + 1):
                ok = structure_constant(j, n, k, cfg) == structure_constant(n, j, k, cfg)
                report.instances.append(Instance({"j": j, "n": n, "k": k}, ok))
    return report


def _monomial(n: int) -> OperationPoly:
    return OperationPoly(tuple([ZERO] * n + [ONE]))


def verify_identity(kind: str, params: Mapping, cfg: RingConfig) -> IdentityReport:
    """Dispatch to one of the identity sweeps: ccong, phi_quotient, theta_power, qbinomial, symmetry."""
    if kind == "ccong":
        return check_ccong(cfg, int(params.get("s_max", 3)), int(params.get("n_max", 8)))
    if kind == "phi_quotient":
        return check_phi_quotient(cfg, int(params.get("n_max", 28)), params.get("step"))
    if kind == "theta_power":
        return check_theta_power(cfg, int(params.get("k", 1)))
    if kind == "qbinomial":
        return check_qbinomial(cfg, int(params.get("k", 1)))
    if kind == "symmetry":
        return check_symmetry(cfg, int(params.get("bound", 10)))
    raise ValueError(f"unknown identity kind {kind!r}")


# -- emitters ---------------------------------------------------------------


def structure_constants_csv(cfg: RingConfig, bound: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "n", "k", "value"])
    for j in range(bound + 1):
        for n in range(bound + 1):
            for k in range(max(j, n), j + n + 1):
                w.writerow([j, n, k, format_rational(structure_constant(j, n, k, cfg))])
    return buf.getvalue()


def phi_vector_json(a: PhiVector) -> str:
    return json.dumps(a.to_json())
