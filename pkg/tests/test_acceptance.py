"""Acceptance criteria.

Each criterion is a function returning (passed, detail).  Under pytest every
criterion is one test and a PASS/FAIL line per criterion is printed in the
terminal summary.  ``python3 -m tests.test_acceptance`` prints the same lines.
"""

import random
from fractions import Fraction
from functools import lru_cache

import pytest

from kdiscrete.arith import make_config, reduce_mod, vp
from kdiscrete.cofree import (
    UElement,
    cofree_truncation,
    gamma,
    lift_through_epi,
    transpose_from,
    transpose_to,
    u_map,
    verify_exact_sequence,
)
from kdiscrete.linalg import zeros
from kdiscrete.modules import (
    annihilation_exponent,
    bousfield_check,
    cyclic,
    direct_sum,
    enumerate_plain_homs,
    free,
    generate_corpus,
    hom_A,
    is_hom,
    is_plain_hom,
    span_closure,
    validate_module,
)
from kdiscrete.opring import (
    adams_expansion,
    check_abcongs,
    check_ccong,
    check_qbinomial,
    check_theta_power,
    phi_to_poly,
    solve_abcongs,
    structure_constant,
)

from . import oracles
from .conftest import ACCEPTANCE_LINES

CRITERIA: dict[int, tuple[str, object]] = {}


def criterion(number, title):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn

    return register


@lru_cache(maxsize=None)
def _theta(n, base):
    return oracles.theta(n, base)


def _phi_coeffs(f, base):
    """Theta-basis coefficients by peeling leading terms, with cached Theta polynomials."""
    f = oracles.trim(f)
    out = [Fraction(0)] * len(f)
    while f:
        d = len(f) - 1
        c = f[-1]
        out[d] = c
        f = oracles.trim([a - c * b for a, b in zip(f, _theta(d, base))])
    return out


# -- ring criteria ----------------------------------------------------------


def structure_constants_vs_oracle(cfg, bound=12):
    checked = 0
    for j in range(bound + 1):
        for n in range(bound + 1):
            want = _phi_coeffs(oracles.pmul(_theta(j, cfg.base), _theta(n, cfg.base)), cfg.base)
            for k in range(j + n + 1):
                if structure_constant(j, n, k, cfg) != want[k]:
                    return False, f"mismatch at (j, n, k) = ({j}, {n}, {k})"
                checked += 1
    return True, f"{checked} constants"


def ccong_sweep(cfg):
    rep = check_ccong(cfg, 3, 8)
    return rep.passed, f"{len(rep.instances)} instances, {len(rep.failures)} failures"


def quotient_congruence(cfg, step, n_max=28):
    pairs = 0
    base, p = cfg.base, cfg.p
    for n in range(1, n_max + 1):
        for m in range(n - step, -1, -step):
            quotient = [Fraction(1)]
            for i in range(m + 1, n + 1):
                quotient = oracles.pmul(quotient, [-oracles.node(i, base), Fraction(1)])
            coeffs = _phi_coeffs(quotient, base)
            coeffs[n - m] -= 1
            need = 1 + vp(n - m, p)
            if any(c and vp(c, p) < need for c in coeffs):
                return False, f"valuation below {need} at (n, m) = ({n}, {m})"
            pairs += 1
    return True, f"{pairs} pairs"


def theta_power(cfg, ks, binomial_ks):
    for k in ks:
        N = cfg.theta_power_index(k)
        t = _theta(N, cfg.base)
        target = [Fraction(-1)] + [Fraction(0)] * (N - 1) + [Fraction(1)]
        if any(a != b and vp(a - b, cfg.p) < 1 for a, b in zip(t, target)):
            return False, f"Theta_{N} differs from X^{N} - 1 mod {cfg.p}"
        if not check_theta_power(cfg, k).passed:
            return False, f"library check failed at k = {k}"
    for k in binomial_ks:
        N = cfg.theta_power_index(k)
        for j in range(1, N):
            if vp(oracles.gaussian_binomial(N, j, cfg.base), cfg.p) < 1:
                return False, f"[{N} choose {j}] not divisible by {cfg.p}"
        if not check_qbinomial(cfg, k).passed:
            return False, f"library q-binomial check failed at k = {k}"
    return True, f"indices {[cfg.theta_power_index(k) for k in ks]}"


@criterion(1, "structure-constant recursion equals expansion oracle")
def crit_structure_constants():
    details = []
    for p in (3, 5):
        ok, d = structure_constants_vs_oracle(make_config(p, 2))
        if not ok:
            return False, f"p={p}: {d}"
        details.append(f"p={p}: {d}")
    return True, "; ".join(details)


@criterion(2, "structure constants vanish mod p in the congruence window")
def crit_ccong():
    details = []
    for p in (3, 5):
        ok, d = ccong_sweep(make_config(p, 2))
        if not ok:
            return False, f"p={p}: {d}"
        details.append(f"p={p}: {d}")
    return True, "; ".join(details)


@criterion(3, "quotient Theta_n/Theta_m is congruent to Phi_(n-m)")
def crit_quotient():
    cfg = make_config(3, 2)
    return quotient_congruence(cfg, cfg.period)


@criterion(4, "Theta at p^k(p-1) is X^N - 1 mod p and its q-binomials vanish mod p")
def crit_theta_power():
    ok, d1 = theta_power(make_config(3, 2), [1, 2], [1])
    if not ok:
        return ok, d1
    ok, d2 = theta_power(make_config(5, 2), [1], [1])
    return ok, f"p=3 {d1}; p=5 {d2}"


@criterion(5, "divisibility congruences solve uniquely on determined unknowns")
def crit_abcongs():
    rng = random.Random(2024)
    runs = 0
    for p in (3, 5):
        cfg = make_config(p, 2)
        for n in range(1, 7):
            K = n + 2 * cfg.period
            rows = [[reduce_mod(structure_constant(j, n, k, cfg), p, 1) if k - n <= j <= k else 0
                     for j in range(K + 1)] for k in range(n, K + 1)]
            null = oracles.nullspace_mod_p(rows, K + 1, p)
            for _ in range(20):
                a = {k: Fraction(rng.randint(-50, 50), rng.choice([1, 2, 4, 7])) for k in range(n, K + 1)}
                sol = solve_abcongs(a, n, cfg)
                if not check_abcongs(sol, a, cfg):
                    return False, f"re-substitution failed at p={p}, n={n}"
                if not sol.guaranteed or any(j not in sol.residues for j in sol.guaranteed):
                    return False, f"guaranteed unknowns missing at p={p}, n={n}"
                if any(v[j] for v in null for j in sol.residues):
                    return False, f"determined unknown not unique at p={p}, n={n}"
                if sol.rank != (K + 1) - len(null):
                    return False, f"rank disagrees with oracle at p={p}, n={n}"
                runs += 1
    return True, f"{runs} systems"


@criterion(6, "Adams expansions are integral, interpolate j^r and multiply")
def crit_adams():
    rng = random.Random(7)
    N = 12
    for p in (3, 5):
        cfg = make_config(p, 2)
        q = Fraction(cfg.q)
        for j in (q * q, Fraction(1 + p), Fraction(2), 1 / q):
            g = adams_expansion(j, N, cfg)
            if any(c.denominator % p == 0 for c in g.coeffs):
                return False, f"g_i({j}) not integral at p={p}"
            if list(g.coeffs) != oracles.adams_coefficients(j, N, cfg.base):
                return False, f"g_i({j}) disagrees with dense interpolation at p={p}"
            f = phi_to_poly(g)
            for e in range(-5, 6):
                if cfg.node_index(e) <= N and f(q**e) != j**e:
                    return False, f"P_{j}(q^{e}) != {j}^{e} at p={p}"
        for _ in range(10):
            a, b = (_random_unit(rng, p) for _ in range(2))
            if adams_expansion(a, N, cfg) * adams_expansion(b, N, cfg) != adams_expansion(a * b, N, cfg):
                return False, f"Psi^{a} Psi^{b} != Psi^{a * b} at p={p}"
    return True, "4 units x 2 primes, 20 products"


def _random_unit(rng, p):
    while True:
        num, den = rng.randint(-40, 40), rng.randint(1, 40)
        if num and num % p and den % p:
            return Fraction(num, den)


# -- module criteria --------------------------------------------------------


@criterion(7, "Bousfield conditions hold exactly when an annihilation exponent exists")
def crit_equivalence():
    details = []
    for p in (3, 5):
        cfg = make_config(p)
        corpus = generate_corpus(cfg, 50, seed=0)
        disagree = [M for M in corpus if bousfield_check(M).passed != (annihilation_exponent(M) is not None)]
        discrete = sum(annihilation_exponent(M) is not None for M in corpus)
        if disagree:
            return False, f"p={p}: {len(disagree)} disagreements"
        if discrete in (0, len(corpus)):
            return False, f"p={p}: corpus is one-sided"
        details.append(f"p={p}: {discrete}/50 discrete, 0 disagreements")
    return True, "; ".join(details)


def sequence_modules(cfg):
    p, b = cfg.p, Fraction(cfg.base)
    mods = [("Z/p", cyclic(cfg, 1, 1)), ("Z/p^2", cyclic(cfg, 2, b))]
    mods += [(f"Z_(p) T=[q^{e}]", free(cfg, b**e)) for e in range(-2, 3)]
    mods.append(("Z/p + Z_(p)", validate_module(cfg, [1], 1, [[1, 1], [0, b]])))
    mods.append(("Z/p^2 + Z_(p)", validate_module(cfg, [2], 1, [[b, p], [0, 1]])))
    return mods


def exact_sequences(cfg):
    rng = random.Random(8)
    for name, M in sequence_modules(cfg):
        S = annihilation_exponent(M) + 2 * cfg.period
        rep = verify_exact_sequence(M, S)
        if not rep.passed:
            bad = [k for k, v in rep.clauses.items() if not v]
            return False, f"{name}: {bad}"
        for _ in range(3):
            f = UElement.build(M, {k: [rng.randint(-4, 4) for _ in range(M.dim)] for k in range(4)}, 4)
            n0 = max(f.bound, annihilation_exponent(M), 1)
            if len({gamma(M, f, n) for n in (n0, n0 + 1, n0 + cfg.period)}) != 1:
                return False, f"{name}: gamma depends on n"
    return True, f"{len(sequence_modules(cfg))} modules, six clauses each, gamma invariant in n"


@criterion(8, "four-term sequence is exact on the support truncation")
def crit_exact_sequence():
    return exact_sequences(make_config(3, 2))


def small_torsion_modules(cfg):
    return [
        cyclic(cfg, 1, 1),
        cyclic(cfg, 1, 2),
        cyclic(cfg, 2, 2),
        cyclic(cfg, 2, 4),
        cyclic(cfg, 3, 2),
        validate_module(cfg, [1, 1], 0, [[1, 1], [0, 1]]),
        validate_module(cfg, [2, 1], 0, [[2, 3], [1, 1]]),
        validate_module(cfg, [1, 1, 1], 0, [[1, 0, 0], [0, 2, 0], [0, 0, 1]]),
    ]


def _hom_count(N, M):
    return N.p ** sum(min(e, f) for e in N.torsion_exponents for f in M.torsion_exponents)


@criterion(9, "cofree adjunction is a bijection and epimorphisms lift")
def crit_adjunction():
    cfg = make_config(3, 2)
    mods = small_torsion_modules(cfg)
    pairs = 0
    for N in mods:
        for M in mods:
            if _hom_count(N, M) > 729:
                continue
            U = cofree_truncation(M, annihilation_exponent(N))
            plain = enumerate_plain_homs(N, M)
            for h in plain:
                G = transpose_from(h, N, U)
                if not is_hom(N, U.module, G) or transpose_to(G, U) != h:
                    return False, f"transpose round trip failed for {N.torsion_exponents} -> {M.torsion_exponents}"
            homs = span_closure(hom_A(N, U.module), U.module)
            if len(homs) != len(plain):
                return False, f"{len(homs)} A-homs but {len(plain)} plain homs"
            if any(transpose_from(transpose_to(G, U), N, U) != G for G in homs):
                return False, "converse round trip failed"
            pairs += 1
    rng = random.Random(9)
    targets = mods + [free(cfg, 2), validate_module(cfg, [1], 1, [[1, 1], [0, 2]])]
    for t in range(10):
        L2 = targets[t % len(targets)]
        K = rng.choice(mods[:5] + [free(cfg, 4)])
        L1 = direct_sum(L2, K)
        e = _projection_with_twist(L1, L2, K, rng)
        if not is_plain_hom(L1, L2, e):
            return False, "constructed epimorphism is not well defined"
        g = UElement.build(L2, {k: [rng.randint(-9, 9) for _ in range(L2.dim)] for k in range(5)})
        h = lift_through_epi(e, L1, L2, g)
        if u_map(e, h, L2) != g:
            return False, f"lift {t} does not map onto g"
    return True, f"{pairs} module pairs exhaustive, 10 lifts"


def _projection_with_twist(L1, L2, K, rng):
    """The map L2 + K -> L2 sending (y, z) to y + B z for a random well-defined B."""
    B = enumerate_plain_homs(K, L2) if not K.free_rank and not L2.free_rank else None
    B = rng.choice(B) if B else zeros(L2.dim, K.dim)
    e = zeros(L2.dim, L1.dim)
    sL, sK = L2.ntors, K.ntors
    pos_L = list(range(sL)) + [sL + sK + i for i in range(L2.free_rank)]
    pos_K = [sL + i for i in range(sK)] + [sL + sK + L2.free_rank + i for i in range(K.free_rank)]
    for i in range(L2.dim):
        e[i][pos_L[i]] = Fraction(1)
        for j in range(K.dim):
            e[i][pos_K[j]] = Fraction(B[i][j])
    return e


@criterion(10, "split variant passes criteria 1-4 and 8 at p = 3")
def crit_split():
    cfg = make_config(3, 2, "split")
    parts = [
        ("1", structure_constants_vs_oracle(cfg)),
        ("2", ccong_sweep(cfg)),
        ("3", quotient_congruence(cfg, cfg.period)),
        ("4", theta_power(cfg, [1, 2], [1])),
        ("8", exact_sequences(cfg)),
    ]
    bad = [f"{n}: {d}" for n, (ok, d) in parts if not ok]
    if bad:
        return False, "; ".join(bad)
    return True, "; ".join(f"{n}: {d}" for n, (_, d) in parts)


# -- drivers ----------------------------------------------------------------


def run_criterion(number):
    title, fn = CRITERIA[number]
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure of the criterion
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    print(line)
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance_criterion(number):
    ok, line = run_criterion(number)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


if __name__ == "__main__":
    import sys

    results = [run_criterion(n)[0] for n in sorted(CRITERIA)]
    sys.exit(0 if all(results) else 1)
