import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whitham_coalescence.errors import NotARoot, SingularLeadingCoefficient
from whitham_coalescence.pencil import (
    Hyperbolicity,
    QuadraticPencil,
    adjugate,
    characteristics,
    determinant,
    determinant_coefficients,
    determinant_derivative_jacobi,
    determinant_derivatives,
    evaluate_pencil,
    graphical_sign_data,
    hyperbolicity_margin,
    hyperbolicity_test,
    kernel_vector,
    pencil_derivative,
    sign_characteristic,
)

from .conftest import random_symmetric


def scalar(a2, a1, a0):
    return QuadraticPencil.from_matrices([[a2]], [[a1]], [[a0]])


def random_pencil(rng, n):
    return QuadraticPencil.from_matrices(*(random_symmetric(rng, n) for _ in range(3)))


# ---------------------------------------------------------------- oracles


def test_c_squared_minus_one_roots_and_signs():
    p = scalar(1, 0, -1)
    chars = characteristics(p)
    assert [round(ch.value.real, 12) for ch in chars] == [-1.0, 1.0]
    # E'(c) = 2c: sign -1 at c = -1 and +1 at c = +1
    assert [ch.sign_char for ch in chars] == [-1, 1]
    assert sign_characteristic(p, 1.0) == 1


def test_evaluate_is_symmetric_and_matches_definition(rng):
    p = random_pencil(rng, 3)
    c = 0.7
    E = evaluate_pencil(p, c)
    np.testing.assert_array_equal(E, E.T)
    np.testing.assert_allclose(E, p.a2 * c**2 + p.a1 * c + p.a0)
    np.testing.assert_allclose(pencil_derivative(p, c, 1), 2 * c * p.a2 + p.a1)
    np.testing.assert_allclose(pencil_derivative(p, c, 2), 2 * p.a2)
    assert not np.any(pencil_derivative(p, c, 3))


def test_asymmetric_input_rejected():
    with pytest.raises(ValueError):
        QuadraticPencil(np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        QuadraticPencil(np.eye(2), np.eye(3), np.eye(2))


def test_singular_leading_coefficient():
    p = QuadraticPencil.from_matrices(np.diag([1.0, 0.0]), np.eye(2), np.eye(2))
    with pytest.raises(SingularLeadingCoefficient):
        characteristics(p)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_determinant_coefficients_match_numpy(rng, n):
    p = random_pencil(rng, n)
    co = determinant_coefficients(p)
    assert len(co) == 2 * n + 1
    for c in np.linspace(-2, 2, 7):
        assert np.polyval(co, c) == pytest.approx(determinant(p, c), rel=1e-9, abs=1e-12)


def test_roots_agree_with_polynomial_roots(rng):
    p = random_pencil(rng, 3)
    ours = np.sort_complex(np.array([ch.value for ch in characteristics(p)]))
    ref = np.sort_complex(np.roots(determinant_coefficients(p)))
    np.testing.assert_allclose(ours, ref, atol=1e-8)


def test_adjugate_identity_for_delta_prime(rng):
    p = random_pencil(rng, 3)
    for c in (-0.3, 0.4, 1.1):
        d0, d1, _ = determinant_derivatives(p, c)
        assert determinant_derivative_jacobi(p, c) == pytest.approx(d1, rel=1e-9, abs=1e-12)
        E = evaluate_pencil(p, c)
        np.testing.assert_allclose(adjugate(E) @ E, d0 * np.eye(3), atol=1e-10)


def test_kernel_vector_and_not_a_root():
    E = np.diag([2.0, 0.0])
    z, s = kernel_vector(E)
    assert abs(abs(z[1]) - 1) < 1e-14
    with pytest.raises(NotARoot):
        kernel_vector(np.eye(2))


def test_graphical_data_for_c2_minus_1():
    data = graphical_sign_data(scalar(1, 0, -1), -2, 2, 5)
    np.testing.assert_allclose(data["delta"], [3, 0, -1, 0, 3], atol=1e-14)


def test_double_root_has_no_sign():
    # (c - 1)^2 in a 1x1 pencil
    chars = characteristics(scalar(1, -2, 1))
    assert all(ch.sign_char is None for ch in chars)
    assert all(ch.is_real for ch in chars)


def test_complex_roots_flagged():
    chars = characteristics(scalar(1, 0, 1))
    assert not any(ch.is_real for ch in chars)
    assert all(ch.sign_char is None for ch in chars)


def test_hyperbolicity_scalar_and_matrix():
    assert hyperbolicity_test(scalar(1, 0, -1)).verdict is Hyperbolicity.HYPERBOLIC
    assert hyperbolicity_test(scalar(1, 0, 1)).verdict is Hyperbolicity.NOT_HYPERBOLIC
    # definite a2, negative definite a0 -> hyperbolic in every direction
    p = QuadraticPencil.from_matrices(np.diag([1.0, 2.0]), np.zeros((2, 2)), -np.diag([1.0, 3.0]))
    assert hyperbolicity_test(p).verdict is Hyperbolicity.HYPERBOLIC
    q = QuadraticPencil.from_matrices(np.diag([1.0, 2.0]), np.zeros((2, 2)), np.diag([-1.0, 3.0]))
    res = hyperbolicity_test(q)
    assert res.verdict is Hyperbolicity.NOT_HYPERBOLIC
    assert hyperbolicity_margin(q, res.witness) <= 0


def test_serialisation_roundtrip(rng):
    p = random_pencil(rng, 2)
    q = QuadraticPencil.from_dict(p.to_dict())
    for a, b in ((p.a2, q.a2), (p.a1, q.a1), (p.a0, q.a0)):
        np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------- properties

seeds = st.integers(min_value=0, max_value=2**31 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_congruence_preserves_roots_and_signs(seed, n):
    rng = np.random.default_rng(seed)
    a2 = random_symmetric(rng, n) + 3 * n * np.eye(n)
    p = QuadraticPencil.from_matrices(a2, random_symmetric(rng, n), random_symmetric(rng, n) - 3 * n * np.eye(n))
    P = rng.normal(size=(n, n)) + 2 * np.eye(n)
    q = p.congruent(P)
    cp, cq = characteristics(p), characteristics(q)
    np.testing.assert_allclose([c.value for c in cp], [c.value for c in cq], atol=1e-7)
    assert [c.sign_char for c in cp] == [c.sign_char for c in cq]


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(1, 4))
def test_roots_have_small_residual_and_come_in_conjugate_pairs(seed, n):
    rng = np.random.default_rng(seed)
    p = QuadraticPencil.from_matrices(random_symmetric(rng, n) + 2 * n * np.eye(n),
                                      random_symmetric(rng, n), random_symmetric(rng, n))
    chars = characteristics(p)
    assert sum(ch.multiplicity for ch in chars) == 2 * n or len(chars) == 2 * n
    vals = np.array([ch.value for ch in chars])
    np.testing.assert_allclose(np.sort_complex(vals), np.sort_complex(vals.conj()), atol=1e-8)
    for ch in chars:
        assert ch.sign_char is None or (ch.is_real and ch.sign_char in (1, -1))


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_scalar_sign_from_derivative(seed):
    rng = np.random.default_rng(seed)
    r1, r2 = np.sort(rng.uniform(-5, 5, 2))
    if r2 - r1 < 1e-2:
        r2 = r1 + 1
    a = rng.uniform(0.2, 3) * rng.choice([-1, 1])
    p = scalar(a, -a * (r1 + r2), a * r1 * r2)
    chars = characteristics(p)
    # E'(c) = a (2c - r1 - r2) is negative at r1 and positive at r2 when a > 0
    assert [ch.sign_char for ch in chars] == [-int(np.sign(a)), int(np.sign(a))]
