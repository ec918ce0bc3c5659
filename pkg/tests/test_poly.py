from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import homogeneous_polynomials, polynomials, rational_matrices
from gradstable.parse import parse_polynomial
from gradstable.poly import (CriticalPointError, NumericPolynomial, PolyMapGerm, Polynomial, PolynomialError,
                             QuadraticSignature, ZeroPolynomialError, check_critical_origin, compose, congruent,
                             evaluate, exact_det, gradient, hessian, initial_form, numeric_linear_compose,
                             quadratic_signature)

XY = "xy"
XYZ = "xyz"


def P(text, names=XYZ):
    return parse_polynomial(text, names, require_critical=False)


def test_zero_polynomial_is_empty_map():
    z = Polynomial(2, {(1, 0): 0, (0, 1): Fraction(0)})
    assert z.is_zero() and z.terms == {}
    assert Polynomial.zero(3).terms == {}


def test_no_zero_coefficients_after_cancellation():
    p = P("x^2 + y", XY) - P("x^2", XY)
    assert p.terms == {(0, 1): 1}


def test_exponent_length_checked():
    with pytest.raises(PolynomialError):
        Polynomial(2, {(1, 0, 0): 1})


def test_evaluate_examples():
    f = P("x^3 - y^2", XY)
    assert evaluate(f, [1, 1]) == 0
    assert evaluate(f, [0, 0]) == 0
    # 1*2*3 - 3^4 = 6 - 81
    assert evaluate(P("x*y*z - z^4"), [1, 2, 3]) == -75
    with pytest.raises(PolynomialError):
        evaluate(f, [1, 2, 3])


def test_evaluate_is_exact_on_fractions():
    f = P("x^3 - y^2", XY)
    assert evaluate(f, [Fraction(1, 3), Fraction(1, 2)]) == Fraction(1, 27) - Fraction(1, 4)


def test_gradient_examples():
    assert gradient(P("x^3 - y^2", XY)) == [P("3*x^2", XY), P("-2*y", XY)]
    assert gradient(Polynomial.zero(2)) == [Polynomial.zero(2), Polynomial.zero(2)]
    f = P("x*y*z + x^4*y - 2*y^4*z + 3*x*z^4")
    assert gradient(f) == [P("y*z + 4*x^3*y + 3*z^4"), P("x*z + x^4 - 8*y^3*z"), P("x*y - 2*y^4 + 12*x*z^3")]


def test_gradient_matches_finite_differences():
    f = P("x*y*z + x^4*y - 2*y^4*z + 3*x*z^4")
    num = NumericPolynomial.from_polynomial(f)
    x = np.array([0.3, -0.7, 0.45])
    h = 1e-6
    fd = [(num(x + h * e) - num(x - h * e)) / (2 * h) for e in np.eye(3)]
    assert np.allclose(num.grad(x), fd, atol=1e-8)


@pytest.mark.parametrize("text,omega,d", [
    ("x^3 - y^2 + 0*z", "-y^2", 2),
    ("z*(x^2) + z*y^2 + x^2*y^2*z - z^4", "x^2*z + y^2*z", 3),
    ("x*y*z + x^4*y - 2*y^4*z + 3*x*z^4", "x*y*z", 3),
])
def test_initial_form_examples(text, omega, d):
    data = initial_form(P(text.replace("*(x^2)", "*x^2")))
    assert data.omega == P(omega)
    assert data.degree_d == d
    assert data.omega + data.remainder_g == P(text.replace("*(x^2)", "*x^2"))


def test_initial_form_rejects_zero():
    with pytest.raises(ZeroPolynomialError):
        initial_form(Polynomial.zero(2))


def test_critical_origin_gate():
    with pytest.raises(CriticalPointError, match="linear"):
        check_critical_origin(P("x + y^2", XY))
    with pytest.raises(CriticalPointError, match="constant"):
        check_critical_origin(P("1 + y^2", XY))
    with pytest.raises(ZeroPolynomialError):
        check_critical_origin(Polynomial.zero(2))
    check_critical_origin(P("x^3 - y^2", XY))


def test_compose_examples():
    f = P("x^3 + 3*x*y^2", XY)
    phi = PolyMapGerm([P("2*x", XY), P("y", XY)])
    assert compose(f, phi) == P("8*x^3 + 6*x*y^2", XY)
    ident = PolyMapGerm([P("x", XY), P("y", XY)])
    g = P("x^5 - x*y + 7/3*y^4", XY)
    assert compose(g, ident) == g
    swap = PolyMapGerm([P("y", XY), P("x", XY)])
    assert compose(P("x^2 + y^2", XY), swap) == P("x^2 + y^2", XY)


def test_compose_with_irrational_map_in_floats():
    # g(x, y) = f(sqrt(3) x, y) = 3 sqrt(3) (x^3 + x y^2)
    f = P("x^3 + 3*x*y^2", XY)
    g = numeric_linear_compose(f, np.diag([np.sqrt(3), 1.0]))
    t = g.terms()
    assert set(t) == {(3, 0), (1, 2)}
    assert t[(3, 0)] == pytest.approx(3 * np.sqrt(3), rel=1e-14)
    assert t[(1, 2)] == pytest.approx(3 * np.sqrt(3), rel=1e-14)


def test_map_germ_rejects_singular_linear_part():
    with pytest.raises(PolynomialError):
        PolyMapGerm([P("x + y", XY), P("2*x + 2*y", XY)])
    with pytest.raises(PolynomialError):
        PolyMapGerm([P("x + 1", XY), P("y", XY)])


def test_initial_form_of_composition_is_omega_of_linear_part():
    f = P("x*y*z - z^4")
    phi = PolyMapGerm([P("x + y^2"), P("y - z + x*z"), P("2*z + x^3")])
    g = compose(f, phi)
    lin = compose(initial_form(f).omega, phi.linear_germ())
    assert initial_form(g).omega == lin


@pytest.mark.parametrize("text,names,sig", [
    ("-x^2 - y^2", XY, (2, 0, 0)),
    ("x^2 - y^2", XY, (1, 0, 1)),
    ("-x^2 - y^2 - z^2 - w^2 + 2*z*w", "xyzw", (3, 1, 0)),
    ("x*y", XY, (1, 0, 1)),
    ("x^2", XYZ, (0, 2, 1)),
])
def test_quadratic_signature_examples(text, names, sig):
    assert quadratic_signature(P(text, names)).as_tuple() == sig


def test_quadratic_signature_of_example_theta():
    g = P("x^5 + z^5 + 2*z*w - x^2 - y^2 - z^2 - w^2 - 2*x*y*z - y^2*z^2", "xyzw")
    assert quadratic_signature(g.homogeneous_part(2)) == QuadraticSignature(3, 1, 0)


def test_quadratic_signature_rejects_non_quadratic():
    with pytest.raises(PolynomialError):
        quadratic_signature(P("x^3", XY))


def test_hessian_symmetric():
    H = hessian(P("x*y*z + x^4*y - 2*y^4*z + 3*x*z^4"))
    for i in range(3):
        for j in range(3):
            assert H[i][j] == H[j][i]


def test_numeric_shadow_agrees_with_exact():
    f = P("x*y*z + x^4*y - 2*y^4*z + 3*x*z^4")
    num = NumericPolynomial.from_polynomial(f)
    pts = [(Fraction(1, 3), Fraction(-2, 5), Fraction(3, 7)), (Fraction(1), Fraction(2), Fraction(-1, 2))]
    for p in pts:
        assert num(np.array([float(v) for v in p])) == pytest.approx(float(evaluate(f, p)), rel=1e-13)


def test_to_string_round_trip_grlex():
    f = P("3*x*z^4 - 2*y^4*z + x^4*y + x*y*z")
    s = f.to_string(list(XYZ))
    assert parse_polynomial(s, XYZ) == f
    # graded lexicographic: degree 5 terms first, x before y before z
    assert s == "x^4*y + 3*x*z^4 - 2*y^4*z + x*y*z"


# -- properties ------------------------------------------------------------


@settings(max_examples=1000, deadline=None)
@given(polynomials(2), polynomials(2), polynomials(2))
def test_ring_laws(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert p - p == Polynomial.zero(2)


@settings(max_examples=1000, deadline=None)
@given(polynomials(3, max_degree=4))
def test_mixed_partials_commute(p):
    for i in range(3):
        for j in range(3):
            assert p.diff(i).diff(j) == p.diff(j).diff(i)


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 5).flatmap(lambda d: st.tuples(st.just(d), homogeneous_polynomials(3, d))))
def test_euler_identity(dp):
    d, p = dp
    lhs = sum((Polynomial.variable(3, i) * p.diff(i) for i in range(3)), Polynomial.zero(3))
    assert lhs == p * d


@settings(max_examples=1000, deadline=None)
@given(polynomials(3, max_degree=5, max_terms=6))
def test_initial_form_reconstructs(p):
    if p.is_zero():
        return
    data = initial_form(p)
    assert data.omega.is_homogeneous(data.degree_d)
    assert all(sum(e) > data.degree_d for e, _ in data.remainder_g.items())
    assert data.omega + data.remainder_g == p


@settings(max_examples=1000, deadline=None)
@given(polynomials(2, max_degree=4), rational_matrices(2))
def test_linear_compose_inverse_round_trip(f, A):
    if exact_det(A) == 0:
        return
    phi = PolyMapGerm.linear(A)
    assert compose(compose(f, phi), phi.linear_inverse()) == f


@settings(max_examples=1000, deadline=None)
@given(homogeneous_polynomials(3, 2), rational_matrices(3))
def test_sylvester_invariance(q, A):
    if q.is_zero() or exact_det(A) == 0:
        return
    assert quadratic_signature(congruent(q, A)) == quadratic_signature(q)


@settings(max_examples=1000, deadline=None)
@given(homogeneous_polynomials(3, 2))
def test_signature_counts_sum_to_n(q):
    if q.is_zero():
        return
    s = quadratic_signature(q)
    assert s.negatives + s.zeros + s.positives == 3
