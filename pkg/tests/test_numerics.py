import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermicurve.errors import (
    DegenerateInputError,
    InputError,
    InsufficientGridError,
    InvalidBracketError,
    NumerovOverflowError,
)
from fermicurve.numerics import (
    ToleranceConfig,
    count_sign_changes,
    derivative_central,
    find_root_bracketed,
    integrate_adaptive,
    numerov_integrate,
    shoelace_area,
)
from fermicurve.states import Grid, hermite_polynomial

TOL = ToleranceConfig()


@pytest.mark.parametrize("f, a, b, expected", [
    (lambda x: x, 0.0, 1.0, 0.5),
    (lambda x: math.sin(x), 0.0, math.pi, 2.0),
    (math.exp, -1.0, 2.0, math.e**2 - math.exp(-1.0)),
])
def test_integrate_smooth(f, a, b, expected):
    assert integrate_adaptive(f, a, b) == pytest.approx(expected, abs=1e-10)


def test_integrate_quarter_circle_with_sqrt_ends():
    f = lambda x: math.sqrt(max(1.0 - x * x, 0.0))
    assert integrate_adaptive(f, -1.0, 1.0, sqrt_ends=(True, True)) == pytest.approx(math.pi / 2, abs=1e-10)


def test_integrate_inverse_sqrt_singularity():
    # int_{-1}^{1} -x^2 / sqrt(1 - x^2) dx = -pi/2; integrand diverges at both ends
    f = lambda x: -x * x / math.sqrt(1.0 - x * x)
    assert integrate_adaptive(f, -1.0, 1.0, sqrt_ends=(True, True)) == pytest.approx(-math.pi / 2, abs=1e-9)


def test_integrate_rejects_empty_interval():
    with pytest.raises(InputError):
        integrate_adaptive(math.sin, 1.0, 1.0)


@given(st.floats(-2.0, 2.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_integrate_is_additive(a, d1, d2):
    f = lambda x: math.exp(-x * x) * math.cos(3 * x)
    b, c = a + d1, a + d1 + d2
    whole = integrate_adaptive(f, a, c, TOL)
    parts = integrate_adaptive(f, a, b, TOL) + integrate_adaptive(f, b, c, TOL)
    assert abs(whole - parts) <= 2 * max(TOL.abs_tol, TOL.rel_tol * abs(whole)) + 1e-13


@pytest.mark.parametrize("f, lo, hi, root", [
    (lambda x: x * x - 2.0, 1.0, 2.0, math.sqrt(2.0)),
    (math.cos, 1.0, 2.0, math.pi / 2),
    (lambda x: x - 0.3, 0.0, 1.0, 0.3),
])
def test_find_root(f, lo, hi, root):
    assert find_root_bracketed(f, lo, hi) == pytest.approx(root, abs=1e-10)


def test_find_root_requires_sign_change():
    with pytest.raises(InvalidBracketError):
        find_root_bracketed(lambda x: x * x + 1.0, -1.0, 1.0)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-3, 3))
def test_find_root_stays_in_bracket(lo, width, shift):
    hi = lo + width
    f = lambda x: math.atan(x - shift) - math.atan(lo - shift) - 0.5 * (math.atan(hi - shift) - math.atan(lo - shift))
    r = find_root_bracketed(f, lo, hi)
    assert lo <= r <= hi


def test_numerov_sine_and_sinh():
    h = 1e-3
    grid = Grid(0.0, 1.0, 1001)
    y = numerov_integrate(lambda x: -np.ones_like(x), grid, 0.0, math.sin(h))
    assert abs(y[-1] - math.sin(1.0)) < 1e-8
    y = numerov_integrate(lambda x: np.ones_like(x), grid, 0.0, math.sinh(h))
    assert abs(y[-1] - math.sinh(1.0)) < 1e-8


def test_numerov_reproduces_harmonic_ground_state():
    grid = Grid(-5.0, 5.0, 10001)
    x = grid.x
    exact = np.exp(-x * x / 2)
    y = numerov_integrate(lambda t: t * t - 1.0, grid, exact[0], exact[1])
    assert np.max(np.abs(y - exact)) < 1e-6


def test_numerov_backward_matches_forward_ordering():
    grid = Grid(0.0, 1.0, 1001)
    x = grid.x
    y = numerov_integrate(lambda t: -np.ones_like(t), grid, math.sin(1.0), math.sin(1.0 - 1e-3), "backward")
    assert np.max(np.abs(y - np.sin(x))) < 1e-8


def test_numerov_wronskian_is_conserved():
    grid = Grid(0.0, 1.0, 1001)
    h = grid.spacing
    y1 = numerov_integrate(lambda x: -np.ones_like(x), grid, 0.0, math.sin(h))
    y2 = numerov_integrate(lambda x: -np.ones_like(x), grid, 1.0, math.cos(h))
    w = y1[:-1] * y2[1:] - y1[1:] * y2[:-1]
    assert np.max(np.abs(w - w[0])) < 1e-8


def test_numerov_overflow_reports_index():
    grid = Grid(0.0, 400.0, 4001)
    with pytest.raises(NumerovOverflowError) as info:
        numerov_integrate(lambda x: 4.0 * np.ones_like(x), grid, 0.0, 1.0)
    assert 0 < info.value.last_index < 4000


def test_derivatives():
    grid = Grid(0.0, 2.0, 2001)
    x = grid.x
    i = grid.index_of(1.0)
    assert derivative_central(x * x, grid, 1)[i] == pytest.approx(2.0, abs=1e-8)
    g2 = Grid(-1.0, 1.0, 2001)
    j = g2.index_of(0.0)
    assert abs(derivative_central(np.sin(g2.x), g2, 2)[j]) < 1e-8
    assert derivative_central(np.exp(g2.x), g2, 1)[j] == pytest.approx(1.0, abs=1e-8)


def test_derivative_needs_five_points():
    with pytest.raises(InsufficientGridError):
        derivative_central([1.0, 2.0, 3.0], Grid(0.0, 1.0, 5))


def test_sign_changes():
    x = np.linspace(0, 3.5 * math.pi, 1000)
    assert count_sign_changes(np.sin(x)) == 3
    assert count_sign_changes(np.ones(10)) == 0
    assert count_sign_changes(hermite_polynomial(3, np.linspace(-3, 3, 601))) == 3
    with pytest.raises(DegenerateInputError):
        count_sign_changes(np.zeros(5))


def test_shoelace_known_shapes():
    t = np.linspace(0, 2 * math.pi, 10000, endpoint=False)
    assert shoelace_area(np.column_stack([np.cos(t), np.sin(t)])) == pytest.approx(math.pi, abs=1e-6)
    assert shoelace_area([[0, 0], [1, 0], [1, 1], [0, 1]]) == pytest.approx(1.0)
    assert shoelace_area(np.column_stack([2 * np.cos(t), 3 * np.sin(t)])) == pytest.approx(6 * math.pi, abs=1e-5)


@given(st.integers(0, 49), st.floats(0, 2 * math.pi))
def test_shoelace_invariant_under_rotation(shift, angle):
    t = np.linspace(0, 2 * math.pi, 50, endpoint=False)
    pts = np.column_stack([2 * np.cos(t) + 0.3 * np.cos(3 * t), np.sin(t)])
    base = shoelace_area(pts)
    assert abs(shoelace_area(np.roll(pts, shift, axis=0)) - base) < 1e-12
    c, s = math.cos(angle), math.sin(angle)
    assert abs(shoelace_area(pts @ np.array([[c, -s], [s, c]])) - base) < 1e-12


def test_tolerance_validation():
    with pytest.raises(InputError):
        ToleranceConfig(abs_tol=0.0)
