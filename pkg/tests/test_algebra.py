import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hlineq.algebra import (
    HomogeneousPolynomial,
    MultiIndex,
    MultilinearForm,
    ScalarField,
    coeff_norm,
    enumerate_multi_indices,
    eval_form,
    eval_poly,
    form_from_json,
    form_to_json,
    mixed_norm_bilinear,
    multinomial,
    polarize,
    poly_from_json,
    poly_to_json,
    restrict,
    symmetrize,
)

X1X2 = HomogeneousPolynomial(2, 2, {(1, 1): 1.0})


def random_poly(rng, n, m, field=ScalarField.REAL):
    alphas = enumerate_multi_indices(n, m)
    values = rng.standard_normal(len(alphas))
    if field is ScalarField.COMPLEX:
        values = values + 1j * rng.standard_normal(len(alphas))
    return HomogeneousPolynomial(n, m, dict(zip(alphas, values)), field)


def brute_force_mixed(A, r_in, r_out):
    n = A.shape[0]
    inner = []
    for k in range(n):
        col = [abs(A[j, k]) for j in range(n)]
        inner.append(max(col) if math.isinf(r_in) else sum(c**r_in for c in col) ** (1 / r_in))
    return max(inner) if math.isinf(r_out) else sum(v**r_out for v in inner) ** (1 / r_out)


# -- multi-indices -----------------------------------------------------------


def test_enumerate_small_cases():
    assert enumerate_multi_indices(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert enumerate_multi_indices(1, 5) == [(5,)]


@pytest.mark.parametrize("n,m", [(3, 2), (2, 5), (4, 3), (3, 4)])
def test_enumerate_matches_brute_force(n, m):
    brute = sorted((a for a in itertools.product(range(m + 1), repeat=n) if sum(a) == m), reverse=True)
    got = enumerate_multi_indices(n, m)
    assert [tuple(a) for a in got] == brute
    assert len(got) == math.comb(n + m - 1, m)
    assert all(a.degree() == m for a in got)


def test_enumerate_rejects_zero():
    with pytest.raises(ValueError):
        enumerate_multi_indices(0, 2)
    with pytest.raises(ValueError):
        enumerate_multi_indices(2, 0)


def test_multinomial():
    assert multinomial(2, (1, 1)) == 2
    assert multinomial(3, (3, 0)) == 1
    assert multinomial(3, (2, 1, 0)) == 3
    with pytest.raises(ValueError):
        multinomial(3, (1, 1))


def test_multi_index_rejects_negative():
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


# -- polynomials -------------------------------------------------------------


def test_polynomial_validation():
    with pytest.raises(ValueError):
        HomogeneousPolynomial(2, 2, {(1, 0): 1.0})
    with pytest.raises(ValueError):
        HomogeneousPolynomial(2, 2, {(1, 1, 0): 1.0})
    with pytest.raises(ValueError):
        HomogeneousPolynomial(2, 0, {})
    with pytest.raises(ValueError):
        HomogeneousPolynomial(2, 2, {(1, 1): 1j})


def test_zero_coefficients_are_dropped_and_keys_ordered():
    P = HomogeneousPolynomial(2, 2, {(0, 2): 1.0, (1, 1): 0.0, (2, 0): 3.0})
    assert list(P.coeffs) == [(2, 0), (0, 2)]


def test_linear_form_allowed():
    P = HomogeneousPolynomial(3, 1, {(1, 0, 0): 2.0, (0, 0, 1): -1.0})
    assert eval_poly(P, np.array([1.0, 5.0, 3.0])) == pytest.approx(-1.0)


def test_eval_poly_examples():
    assert eval_poly(X1X2, np.array([1.0, 1.0])) == 1.0
    s = 2**-0.5
    assert eval_poly(X1X2, np.array([s, s])) == pytest.approx(0.5, abs=1e-15)
    P = HomogeneousPolynomial(2, 2, {(1, 1): 2.0})
    for t in (0.3, -1.7, 4.0):
        assert eval_poly(P, np.array([t, t])) == pytest.approx(2 * t * t, rel=1e-15)
    with pytest.raises(ValueError):
        eval_poly(X1X2, np.ones(3))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), m=st.integers(1, 5), seed=st.integers(0, 2**32 - 1), t=st.floats(-3, 3).filter(lambda t: abs(t) > 1e-3))
def test_homogeneity(n, m, seed, t):
    rng = np.random.default_rng(seed)
    P = random_poly(rng, n, m)
    x = rng.standard_normal(n)
    base = eval_poly(P, x)
    assert eval_poly(P, t * x) == pytest.approx(t**m * base, rel=1e-12, abs=1e-12 * abs(t) ** m * np.sum(np.abs(P.values)))


# -- forms -------------------------------------------------------------------


def test_eval_form_examples():
    I = MultilinearForm(np.eye(2))
    assert eval_form(I, np.array([1.0, 0]), np.array([1.0, 0])) == 1.0
    assert eval_form(I, np.array([1.0, 0]), np.array([0.0, 1])) == 0.0
    with pytest.raises(ValueError):
        eval_form(I, np.array([1.0, 0]))
    with pytest.raises(ValueError):
        eval_form(I, np.ones(3), np.ones(3))


@pytest.mark.parametrize("n,p,q", [(3, 4.0, 4.0), (5, 3.0, 6.0), (8, 2.5, 10.0)])
def test_eval_diagonal_at_constant_vectors(n, p, q):
    A = MultilinearForm(np.eye(n))
    x, y = np.full(n, n ** (-1 / p)), np.full(n, n ** (-1 / q))
    direct = sum(x[j] * y[j] for j in range(n))
    assert eval_form(A, x, y) == pytest.approx(direct, rel=1e-14)
    assert direct == pytest.approx(n ** (1 - 1 / p - 1 / q), rel=1e-14)


def test_eval_form_is_multilinear():
    rng = np.random.default_rng(3)
    T = MultilinearForm(rng.standard_normal((3, 3, 3)))
    x, y, z, w = rng.standard_normal((4, 3))
    a, b = 1.7, -0.4
    assert eval_form(T, x, a * y + b * w, z) == pytest.approx(a * eval_form(T, x, y, z) + b * eval_form(T, x, w, z))


def test_form_shape_validation():
    with pytest.raises(ValueError):
        MultilinearForm(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        MultilinearForm(np.array([[1j, 0], [0, 0]]), ScalarField.REAL)


def test_form_is_immutable():
    T = MultilinearForm(np.eye(2))
    with pytest.raises(ValueError):
        T.entries[0, 0] = 5.0
    with pytest.raises(AttributeError):
        T.field = ScalarField.COMPLEX


# -- polarization ------------------------------------------------------------


def test_polarize_x1x2():
    L = polarize(X1X2)
    np.testing.assert_array_equal(L.entries, [[0.0, 0.5], [0.5, 0.0]])


def test_polarize_square():
    L = polarize(HomogeneousPolynomial(2, 2, {(2, 0): 1.0}))
    np.testing.assert_array_equal(L.entries, [[1.0, 0.0], [0.0, 0.0]])


def test_restrict_examples():
    assert restrict(MultilinearForm([[0.0, 0.5], [0.5, 0.0]])) == X1X2
    zero = restrict(MultilinearForm(np.zeros((2, 2))))
    assert not zero.coeffs


def test_restrict_rejects_asymmetric():
    with pytest.raises(ValueError):
        restrict(MultilinearForm([[0.0, 1.0], [0.0, 0.0]]))


def test_restrict_matches_form_on_diagonal():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((4, 4))
    L = MultilinearForm((A + A.T) / 2)
    P = restrict(L)
    for x in rng.standard_normal((100, 4)):
        assert eval_poly(P, x) == pytest.approx(eval_form(L, x, x), rel=1e-12, abs=1e-12)


def test_polarize_random_cubic_round_trip():
    rng = np.random.default_rng(5)
    P = random_poly(rng, 3, 3)
    L = polarize(P)
    assert L.is_symmetric()
    Q = restrict(L)
    for alpha in enumerate_multi_indices(3, 3):
        assert Q.coefficient(alpha) == pytest.approx(P.coefficient(alpha), rel=1e-12, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(1, 6),
    m=st.integers(1, 4),
    complex_field=st.booleans(),
    seed=st.integers(0, 2**32 - 1),
)
def test_polarization_properties(n, m, complex_field, seed):
    field = ScalarField.COMPLEX if complex_field else ScalarField.REAL
    rng = np.random.default_rng(seed)
    P = random_poly(rng, n, m, field)
    L = polarize(P)
    for perm in itertools.permutations(range(m)):
        np.testing.assert_array_equal(L.entries, np.transpose(L.entries, perm))
    Q = restrict(L)
    for alpha in enumerate_multi_indices(n, m):
        assert abs(Q.coefficient(alpha) - P.coefficient(alpha)) <= 1e-12 * max(1.0, abs(P.coefficient(alpha)))
    x = rng.standard_normal(n)
    if complex_field:
        x = x + 1j * rng.standard_normal(n)
    assert abs(eval_form(L, *([x] * m)) - eval_poly(P, x)) <= 1e-12 * max(1.0, abs(eval_poly(P, x)))


def test_symmetrize_examples():
    T = np.zeros((2, 2))
    T[0, 1] = 1.0
    S = symmetrize(MultilinearForm(T))
    np.testing.assert_array_equal(S.entries, [[0.0, 0.5], [0.5, 0.0]])
    L = polarize(random_poly(np.random.default_rng(0), 3, 3))
    np.testing.assert_allclose(symmetrize(L).entries, L.entries, rtol=0, atol=1e-15)


def test_symmetrize_preserves_diagonal_evaluation():
    rng = np.random.default_rng(8)
    T = MultilinearForm(rng.standard_normal((3, 3, 3)))
    S = symmetrize(T)
    assert S.is_symmetric()
    for x in rng.standard_normal((20, 3)):
        assert eval_form(S, x, x, x) == pytest.approx(eval_form(T, x, x, x), rel=1e-12, abs=1e-12)


# -- coefficient norms -------------------------------------------------------


def test_coeff_norm_examples():
    P = HomogeneousPolynomial(2, 2, {(2, 0): 1.0, (1, 1): 2.0})
    assert coeff_norm(P, math.inf) == 2.0
    assert coeff_norm(MultilinearForm(np.eye(4)), 2) == pytest.approx(2.0, rel=1e-15)
    N = 8
    signs = np.random.default_rng(1).choice([-1.0, 1.0], size=(N, N))
    assert coeff_norm(MultilinearForm(signs), 4 / 3) == pytest.approx(64 ** 0.75, rel=1e-13)
    assert 64 ** 0.75 == pytest.approx(22.627417, rel=1e-7)
    with pytest.raises(ValueError):
        coeff_norm(P, 0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.3, 10), s=st.floats(0.3, 10))
def test_coeff_norm_monotone(seed, r, s):
    r, s = min(r, s), max(r, s)
    T = MultilinearForm(np.random.default_rng(seed).standard_normal((4, 4)))
    assert coeff_norm(T, s) <= coeff_norm(T, r) * (1 + 1e-12)
    assert coeff_norm(T, math.inf) <= coeff_norm(T, s) * (1 + 1e-12)


def test_mixed_norm_examples():
    I = MultilinearForm(np.eye(2))
    for lam in (0.5, 1.0, 2.0, 3.0):
        assert mixed_norm_bilinear(I, 2, lam) == pytest.approx(2 ** (1 / lam), rel=1e-14)
    assert mixed_norm_bilinear(I, 1, math.inf) == 1.0
    assert mixed_norm_bilinear(I, math.inf, 1) == 2.0
    with pytest.raises(ValueError):
        mixed_norm_bilinear(MultilinearForm(np.zeros((2, 2, 2))), 2, 2)
    with pytest.raises(ValueError):
        mixed_norm_bilinear(I, 0, 2)


def test_mixed_norm_inner_runs_over_first_index():
    A = np.array([[3.0, 0.0], [4.0, 1.0]])
    # columns (k) have ell_2 norms 5 and 1
    assert mixed_norm_bilinear(MultilinearForm(A), 2, 1) == pytest.approx(6.0)
    assert mixed_norm_bilinear(MultilinearForm(A), 2, 1) == pytest.approx(brute_force_mixed(A, 2, 1))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.floats(0.5, 8), s=st.floats(0.5, 8))
def test_mixed_norm_against_brute_force(seed, r, s):
    A = np.random.default_rng(seed).standard_normal((5, 5))
    assert mixed_norm_bilinear(MultilinearForm(A), r, s) == pytest.approx(brute_force_mixed(A, r, s), rel=1e-12)
    assert mixed_norm_bilinear(MultilinearForm(A), r, r) == pytest.approx(coeff_norm(MultilinearForm(A), r), rel=1e-12)


# -- serialization -----------------------------------------------------------


def test_poly_json_round_trip_is_bit_exact():
    rng = np.random.default_rng(2)
    for field in ScalarField:
        P = random_poly(rng, 3, 3, field)
        text = poly_to_json(P)
        Q = poly_from_json(text)
        assert Q == P
        assert poly_to_json(Q) == text


def test_poly_json_shape():
    import json

    data = json.loads(poly_to_json(X1X2))
    assert data == {"field": "real", "n": 2, "m": 2, "coeffs": [{"alpha": [1, 1], "re": 1.0, "im": 0.0}]}


def test_form_json_round_trip_is_bit_exact():
    rng = np.random.default_rng(4)
    T = MultilinearForm(rng.standard_normal((3, 3, 3)))
    U = MultilinearForm(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    for form in (T, U):
        back = form_from_json(form_to_json(form))
        assert back == form
        assert back.entries.tobytes() == form.entries.tobytes()
