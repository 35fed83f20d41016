"""Exact p-local arithmetic: valuations, residues, ring configuration and q-binomials."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

Rational = Union[int, Fraction]

# Elements of Z_(p) and of Q are both plain Fractions; "p-local" is a property
# checked against a prime, not a separate type.
PLocalRational = Fraction


class _Infinity:
    """Valuation of zero.  Compares above every integer and absorbs addition."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("kdiscrete.INF")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__


INF = _Infinity()


class ConfigError(ValueError):
    pass


class NotPrimeError(ConfigError):
    pass


class EvenPrimeError(ConfigError):
    pass


class NotPrimitiveError(ConfigError):
    pass


class NotPLocalError(ValueError):
    """A value with negative p-adic valuation where a p-local integer is required."""


class IntegralityError(ArithmeticError):
    """An internal result that must be p-integral is not; indicates a bug or a false lemma."""


def as_fraction(x: Rational | str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def _vp_int(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp(x: Rational, p: int):
    """p-adic valuation of ``x``; returns ``INF`` for zero."""
    x = as_fraction(x)
    if x == 0:
        return INF
    return _vp_int(x.numerator, p) - _vp_int(x.denominator, p)


def is_plocal(x: Rational, p: int) -> bool:
    return as_fraction(x).denominator % p != 0


def reduce_mod(x: Rational, p: int, m: int) -> int:
    """Residue of the p-local number ``x`` in Z/p^m, in ``range(p**m)``."""
    x = as_fraction(x)
    if x.denominator % p == 0:
        raise NotPLocalError(f"{x} is not p-local for p={p}")
    mod = p**m
    return x.numerator * pow(x.denominator, -1, mod) % mod


def unit_part(x: Rational, p: int) -> Fraction:
    """``x / p**vp(x)`` for nonzero ``x``."""
    x = as_fraction(x)
    return x / Fraction(p) ** vp(x, p)


def format_rational(x: Rational) -> str:
    x = as_fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s: str | int | Fraction) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    return Fraction(s.strip())


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def multiplicative_order(a: int, m: int) -> int:
    """Order of ``a`` in (Z/m)^x; raises ValueError when ``a`` is not invertible."""
    a %= m
    if m == 1:
        return 1
    from math import gcd

    if gcd(a, m) != 1:
        raise ValueError(f"{a} is not invertible mod {m}")
    k, x = 1, a
    while x != 1:
        x = x * a % m
        k += 1
    return k


def is_primitive_mod_p2(q: int, p: int) -> bool:
    m = p * p
    if q % p == 0:
        return False
    group_order = p * (p - 1)
    return all(pow(q, group_order // r, m) != 1 for r in _prime_factors(group_order))


def default_q(p: int) -> int:
    """Smallest positive integer primitive modulo p^2."""
    q = 2
    while not is_primitive_mod_p2(q, p):
        q += 1
    return q


class Variant(str, enum.Enum):
    NONSPLIT = "nonsplit"
    SPLIT = "split"


@dataclass(frozen=True)
class RingConfig:
    """Prime, primitive root, variant and default truncation.

    The split variant works with the base ``q**(p-1)`` in place of ``q``: its
    node sequence, Adams weights and q-binomials all use that base.
    """

    p: int
    q: int
    variant: Variant = Variant.NONSPLIT
    N: int = 12

    @property
    def base(self) -> int:
        if self.variant is Variant.SPLIT:
            return self.q ** (self.p - 1)
        return self.q

    @property
    def period(self) -> int:
        """Period of the node sequence modulo p (2p-2, or 2 in the split ring)."""
        return 2 if self.variant is Variant.SPLIT else 2 * self.p - 2

    @staticmethod
    def exponent(i: int) -> int:
        """Exponent e_i with q_i = base**e_i: 0, 1, -1, 2, -2, ... for i = 1, 2, ..."""
        if i < 1:
            raise ValueError("node indices start at 1")
        half = i // 2
        return half if i % 2 == 0 else -half

    def node(self, i: int) -> Fraction:
        return _node(self.base, i)

    def node_index(self, e: int) -> int:
        """Index i with e_i = e (inverse of :meth:`exponent`)."""
        return 2 * e if e > 0 else 1 - 2 * e

    def adams_weight(self, j: Rational) -> Fraction:
        """Value by which Psi^j scales the degree-one piece where Psi^q acts by ``base``."""
        j = as_fraction(j)
        if self.variant is Variant.SPLIT:
            return j ** (self.p - 1)
        return j

    def theta_power_index(self, k: int) -> int:
        """Index n with Theta_n(X) congruent to X^n - 1 mod p."""
        if self.variant is Variant.SPLIT:
            return self.p**k
        return self.p**k * (self.p - 1)

    def with_variant(self, variant: Variant | str) -> "RingConfig":
        return RingConfig(self.p, self.q, Variant(variant), self.N)


@lru_cache(maxsize=None)
def _node(base: int, i: int) -> Fraction:
    return Fraction(base) ** RingConfig.exponent(i)


def make_config(
    p: int,
    q: int | None = None,
    variant: Variant | str = Variant.NONSPLIT,
    N: int = 12,
) -> RingConfig:
    """Validate ``(p, q)`` and build a :class:`RingConfig`.

    ``q`` defaults to the smallest positive integer primitive mod p^2.
    """
    if not is_prime(p):
        raise NotPrimeError(f"p={p} is not prime")
    if p == 2:
        raise EvenPrimeError("p must be an odd prime")
    if q is None:
        q = default_q(p)
    if not is_primitive_mod_p2(q, p):
        try:
            order = multiplicative_order(q, p * p)
        except ValueError:
            order = None
        raise NotPrimitiveError(
            f"q={q} has order {order} mod {p * p}, expected {p * (p - 1)}"
        )
    if N < 1:
        raise ConfigError("truncation N must be positive")
    return RingConfig(p, q, Variant(variant), N)


def gaussian_binomial(n: int, k: int, cfg: RingConfig) -> Fraction:
    """Gaussian binomial [n choose k] in the configured base, by the Pascal recurrence."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    return Fraction(_gaussian_row(cfg.base, n)[k])


@lru_cache(maxsize=None)
def _gaussian_row(base: int, n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _gaussian_row(base, n - 1)
    row = [1] * (n + 1)
    for k in range(1, n):
        # [n, k] = [n-1, k-1] + base^k [n-1, k]
        row[k] = prev[k - 1] + base**k * prev[k]
    return tuple(row)
