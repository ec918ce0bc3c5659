import numpy as np
import pytest

from gradstable.critical import CriticalKind, classify_signature, find_sphere_critical_points
from gradstable.parse import parse_polynomial
from gradstable.poly import NumericPolynomial, QuadraticSignature


def P(text, names="xyz"):
    return parse_polynomial(text, names)


def test_cubic_has_maximum_on_negative_side():
    # on the circle omega = 3c - 2c^3 with c = cos(theta)
    pts = find_sphere_critical_points(P("x^3 + 3*x*y^2", "xy"))
    assert [p.classification for p in pts] == [CriticalKind.MIN, CriticalKind.MIN, CriticalKind.MAX]
    top = pts[-1]
    assert np.allclose(top.location, (-1.0, 0.0), atol=1e-6)
    assert top.value == pytest.approx(-1.0, abs=1e-9)
    for p in pts[:2]:
        assert p.value == pytest.approx(-np.sqrt(2), abs=1e-9)
        assert p.location[0] == pytest.approx(-1 / np.sqrt(2), abs=1e-9)


def test_negative_square_has_two_minima():
    pts = find_sphere_critical_points(P("-y^2", "xy"))
    locs = sorted(tuple(np.round(p.location, 9)) for p in pts)
    assert locs == [(0.0, -1.0), (0.0, 1.0)]
    assert all(p.classification is CriticalKind.MIN for p in pts)


def test_constant_on_sphere_is_degenerate():
    pts = find_sphere_critical_points(P("-x^2 - y^2", "xy"), attempts=8)
    assert pts
    assert all(p.classification is CriticalKind.DEGENERATE for p in pts)


def test_xyz_saddles_and_extrema():
    pts = find_sphere_critical_points(P("x*y*z"))
    kinds = {p.classification for p in pts}
    # the negative octants each hold one minimum at (+-1, +-1, +-1)/sqrt 3
    mins = [p for p in pts if p.classification is CriticalKind.MIN]
    assert len(mins) == 4 and kinds == {CriticalKind.MIN}
    for p in mins:
        assert np.allclose(np.abs(p.location), 1 / np.sqrt(3), atol=1e-9)
        assert p.value == pytest.approx(-1 / 3 ** 1.5)


def test_points_satisfy_lagrange_condition():
    omega = P("x^2*y - z^3 + x*y*z")
    num = NumericPolynomial.from_polynomial(omega)
    pts = find_sphere_critical_points(omega, only_negative=False)
    assert pts
    for p in pts:
        x = np.array(p.location)
        g = num.grad(x[None, :])[0]
        assert np.linalg.norm(x) == pytest.approx(1.0)
        assert np.linalg.norm(g - (g @ x) * x) < 1e-9
        # Euler: the normal component is d * omega
        assert g @ x == pytest.approx(3 * p.value, abs=1e-9)


def test_only_negative_filter():
    f = P("x^3 + 3*x*y^2", "xy")
    everything = find_sphere_critical_points(f, only_negative=False)
    assert len(everything) == 6
    assert sorted({round(p.value, 9) for p in everything}) == [round(-np.sqrt(2), 9), -1.0, 1.0, round(np.sqrt(2), 9)]


def test_classify_signature():
    assert classify_signature(QuadraticSignature(0, 0, 2)) is CriticalKind.MIN
    assert classify_signature(QuadraticSignature(2, 0, 0)) is CriticalKind.MAX
    assert classify_signature(QuadraticSignature(1, 0, 1)) is CriticalKind.SADDLE
    assert classify_signature(QuadraticSignature(1, 1, 0)) is CriticalKind.DEGENERATE


def test_rejects_non_homogeneous():
    with pytest.raises(ValueError):
        find_sphere_critical_points(P("x^2 + y^3", "xy"))
