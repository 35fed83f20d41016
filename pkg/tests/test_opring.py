import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kdiscrete.arith import IntegralityError, make_config, reduce_mod, vp
from kdiscrete.opring import (
    NotAUnitError,
    OperationPoly,
    PhiVector,
    TruncationMismatch,
    adams_expansion,
    augmentation,
    check_abcongs,
    check_phi_quotient,
    check_theta_power,
    divide_phi,
    filtration_order,
    is_unit,
    multiply,
    phi_to_poly,
    poly_coefficients_in_phi,
    poly_to_phi,
    psi_q,
    solve_abcongs,
    structure_constant,
    structure_constants_csv,
    theta_poly,
    theta_poly_punctured,
    verify_identity,
)

from . import oracles

X = OperationPoly.x()
CONFIGS = [make_config(3, 2), make_config(5, 2), make_config(3, 2, "split"), make_config(7, 3)]
small = st.integers(min_value=-20, max_value=20)


def poly(*c):
    return OperationPoly(tuple(Fraction(x) for x in c))


@st.composite
def phi_vectors(draw, cfg, N=6):
    coeffs = draw(st.lists(small, min_size=N, max_size=N))
    return PhiVector(tuple(Fraction(c) for c in coeffs), cfg)


@st.composite
def units(draw, p):
    num = draw(st.integers(1, 60).filter(lambda x: x % p))
    den = draw(st.integers(1, 60).filter(lambda x: x % p))
    sign = draw(st.sampled_from([1, -1]))
    return Fraction(sign * num, den)


def test_poly_trims_and_evaluates():
    f = poly(1, 2, 0, 0)
    assert f.coeffs == (1, 2)
    assert f.degree == 1
    assert f(3) == 7
    assert OperationPoly().degree == -1


def test_theta_examples(cfg3):
    assert theta_poly(0, cfg3) == poly(1)
    q = Fraction(2)
    expect = (X - 1) * (X - q) * (X - 1 / q) * (X - q * q)
    assert theta_poly(4, cfg3) == expect
    assert theta_poly_punctured(1, 1, cfg3) == poly(1)


def test_basis_change_examples(cfg3):
    assert poly_to_phi(poly(1), cfg3).coeffs == (1,)
    assert poly_to_phi(X, cfg3).coeffs == (1, 1)
    assert poly_to_phi((X - 1) * (X - 1), cfg3).coeffs == (0, 1, 1)


@pytest.mark.parametrize("cfg", CONFIGS)
def test_basis_change_matches_leading_term_oracle(cfg):
    rng = random.Random(1)
    for _ in range(10):
        f = poly(*(rng.randint(-9, 9) for _ in range(rng.randint(1, 9))))
        got = poly_coefficients_in_phi(f, cfg)
        want = oracles.phi_decompose(list(f.coeffs), cfg.base)
        assert oracles.trim(got) == oracles.trim(want)


@given(st.sampled_from(CONFIGS[:3]), st.data())
def test_basis_change_round_trips(cfg, data):
    a = data.draw(phi_vectors(cfg))
    assert poly_to_phi(phi_to_poly(a), cfg, a.truncation) == a
    f = OperationPoly(tuple(Fraction(c) for c in data.draw(st.lists(small, min_size=1, max_size=6))))
    assert phi_to_poly(poly_to_phi(f, cfg)) == f


def test_structure_constant_examples(cfg3):
    assert structure_constant(1, 1, 1, cfg3) == 1
    for j in range(5):
        for n in range(5):
            assert structure_constant(j, n, j + n, cfg3) == 1
            for k in range(max(j, n)):
                assert structure_constant(j, n, k, cfg3) == 0


@pytest.mark.parametrize("cfg", CONFIGS)
def test_structure_constants_match_expansion_oracle(cfg):
    for j in range(7):
        for n in range(7):
            for k in range(j + n + 1):
                assert structure_constant(j, n, k, cfg) == oracles.structure_constant(j, n, k, cfg.base)


def test_multiply_examples(cfg3):
    a = PhiVector.basis(1, 4, cfg3)
    assert multiply(a, a).coeffs == (0, 1, 1, 0)
    one = PhiVector.basis(0, 4, cfg3)
    assert multiply(a, one) == a
    assert multiply(PhiVector.basis(2, 3, cfg3), PhiVector.basis(3, 3, cfg3)) == PhiVector.zero(3, cfg3)


def test_multiply_rejects_mismatched_truncations(cfg3):
    with pytest.raises(TruncationMismatch):
        multiply(PhiVector.basis(0, 3, cfg3), PhiVector.basis(0, 4, cfg3))


def test_phi_vector_rejects_non_local_coefficients(cfg3):
    with pytest.raises(IntegralityError):
        PhiVector((Fraction(1, 3),), cfg3)


@given(st.sampled_from(CONFIGS[:3]), st.data())
def test_multiply_is_commutative_and_associative(cfg, data):
    a, b, c = (data.draw(phi_vectors(cfg, 5)) for _ in range(3))
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@pytest.mark.parametrize("cfg", CONFIGS[:3])
def test_psi_times_phi_shifts_index(cfg):
    N = 10
    for k in range(N - 1):
        lhs = multiply(psi_q(N, cfg), PhiVector.basis(k, N, cfg))
        rhs = PhiVector.basis(k + 1, N, cfg) + PhiVector.basis(k, N, cfg).scale(cfg.node(k + 1))
        assert lhs == rhs


def test_adams_examples(cfg3):
    assert adams_expansion(1, 6, cfg3).coeffs == (1, 0, 0, 0, 0, 0)
    assert adams_expansion(2, 6, cfg3).coeffs == (1, 1, 0, 0, 0, 0)
    g = adams_expansion(5, 6, cfg3)
    assert g.coeffs[:2] == (1, 4)


@given(st.sampled_from(CONFIGS[:2]), st.data())
def test_adams_first_coefficient(cfg, data):
    j = data.draw(units(cfg.p))
    assert adams_expansion(j, 3, cfg).coeffs[1] == (j - 1) / (cfg.q - 1)


@pytest.mark.parametrize("cfg", CONFIGS[:3])
def test_adams_matches_dense_interpolation(cfg):
    for j in (Fraction(4), Fraction(1, 2), Fraction(7), Fraction(-1)):
        if j.numerator % cfg.p == 0:
            continue
        got = adams_expansion(j, 8, cfg).coeffs
        assert list(got) == oracles.adams_coefficients(cfg.adams_weight(j), 8, cfg.base)


def test_adams_rejects_non_units(cfg3):
    with pytest.raises(NotAUnitError):
        adams_expansion(3, 4, cfg3)
    with pytest.raises(NotAUnitError):
        adams_expansion(0, 4, cfg3)


@given(st.sampled_from(CONFIGS[:3]), st.data())
def test_adams_is_multiplicative(cfg, data):
    a, b = data.draw(units(cfg.p)), data.draw(units(cfg.p))
    N = 8
    assert adams_expansion(a, N, cfg) * adams_expansion(b, N, cfg) == adams_expansion(a * b, N, cfg)


@given(st.sampled_from(CONFIGS[:2]), st.data())
def test_adams_polynomial_hits_weight_powers_at_nodes(cfg, data):
    j = data.draw(units(cfg.p))
    N = 11
    f = phi_to_poly(adams_expansion(j, N, cfg))
    for e in range(-5, 6):
        if cfg.node_index(e) <= N:
            assert f(Fraction(cfg.base) ** e) == j**e


def test_divide_examples(cfg3):
    assert divide_phi(2, 1, cfg3) == X - 2
    for n in range(1, 8):
        assert divide_phi(n, n - 1, cfg3) == X - cfg3.node(n)
    coeffs = poly_coefficients_in_phi(divide_phi(5, 1, cfg3), cfg3)
    coeffs[4] -= 1
    assert all(vp(c, 3) >= 1 for c in coeffs if c)


def test_unit_examples(cfg3):
    assert is_unit(poly(1), cfg3)
    assert not is_unit(X - 1, cfg3)
    assert is_unit(X - 3, cfg3)


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=5), st.sampled_from(CONFIGS[:3]))
def test_unit_check_over_one_period_agrees_with_three(coeffs, cfg):
    f = poly(*coeffs)
    assert is_unit(f, cfg) == is_unit(f, cfg, periods=3)


def test_augmentation_and_filtration(cfg3):
    assert augmentation(PhiVector.basis(0, 4, cfg3)) == 1
    assert filtration_order(PhiVector.basis(0, 4, cfg3)) == 0
    assert augmentation(PhiVector.basis(3, 4, cfg3)) == 0
    assert filtration_order(PhiVector.basis(3, 4, cfg3)) == 3
    assert filtration_order(PhiVector.zero(8, cfg3)) == 8


def test_abcongs_homogeneous_system_has_zero_solution(cfg3):
    sol = solve_abcongs([0] * 9, 1, cfg3)
    assert all(v == 0 for v in sol.residues.values())
    assert set(sol.guaranteed) <= set(sol.residues)


def test_abcongs_with_n_one_reads_off_unknowns(cfg3):
    # congruence k reads b_{k-1} + (q_{k+1} - q_1) b_k = a_k
    rng = random.Random(5)
    a = {k: rng.randrange(3) for k in range(1, 10)}
    sol = solve_abcongs(a, 1, cfg3)
    for j, r in sol.residues.items():
        nxt = sol.residues.get(j + 1)
        if nxt is not None:
            c = reduce_mod(structure_constant(j + 1, 1, j + 1, cfg3), 3, 1)
            assert (r + c * nxt) % 3 == a[j + 1]
    assert set(range(8)) <= set(sol.residues)


def test_abcongs_round_trip(cfg3):
    rng = random.Random(11)
    for _ in range(5):
        a = [rng.randrange(3) for _ in range(9)]
        sol = solve_abcongs(a, 4, cfg3)
        assert check_abcongs(sol, a, cfg3)


def test_abcongs_rejects_empty_window(cfg5):
    with pytest.raises(ValueError):
        solve_abcongs([], 4, cfg5)


def test_identity_reports(cfg3):
    rep = check_theta_power(cfg3, 1)
    assert rep.passed and "X^6 - 1" in rep.instances[0].detail
    assert check_phi_quotient(cfg3, 5).passed
    assert verify_identity("symmetry", {"bound": 10}, cfg3).passed
    with pytest.raises(ValueError):
        verify_identity("nonsense", {}, cfg3)


def test_constants_csv_header(cfg3):
    text = structure_constants_csv(cfg3, 2)
    assert text.splitlines()[0] == "j,n,k,value"
    assert "1,1,1,1" in text.splitlines()
