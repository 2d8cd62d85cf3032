import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermicurve.errors import (
    DegenerateCurveError,
    InconsistencyError,
    InsufficientSupportError,
    InvalidCurveError,
    MultiWellError,
    NoCurveError,
    ShapeError,
)
from fermicurve.fermi_map import (
    FermiFunction,
    PhaseCurve,
    QuadraticFermiForm,
    curve_area,
    curve_from_fermi,
    factor_unimodular,
    fermi_from_wavefunction,
    gaussian_fermi_closed_form,
    hermite_fermi_closed_form,
    verify_fermi_operator,
)
from fermicurve.quantization import numerov_eigensolve
from fermicurve.states import Grid, PhysicalConstants, Potential, SampledWavefunction, make_hermite_state, make_squeezed_gaussian

from conftest import gaussian_grid, hermite_grid

H = 2 * math.pi


@pytest.mark.parametrize("a, b", [(1.0, 0.0), (2.0, 1.0), (0.5, -2.0)])
def test_gaussian_fermi_pair(a, b):
    g = gaussian_grid(a)
    F = fermi_from_wavefunction(make_squeezed_gaussian(a, b, g))
    x = g.x[F.valid_mask]
    inner = np.abs(x) < 4.0 / math.sqrt(a)
    assert np.max(np.abs(F.f[F.valid_mask][inner] + b * x[inner])) < 1e-6
    assert np.max(np.abs(F.g[F.valid_mask][inner] - (a * a * x[inner] ** 2 - a))) < 1e-5


@pytest.mark.parametrize("N", [0, 2, 5])
def test_hermite_fermi_pair(N):
    g = hermite_grid(N)
    F = fermi_from_wavefunction(make_hermite_state(N, 1.0, g))
    x = g.x[F.valid_mask]
    inner = np.abs(x) < math.sqrt(2 * N + 1) + 2
    np.testing.assert_allclose(F.f[F.valid_mask], 0.0, atol=1e-12)
    assert np.max(np.abs(F.g[F.valid_mask][inner] - (x[inner] ** 2 - (2 * N + 1)))) < 1e-4


def test_plane_wave_is_degenerate():
    g = Grid(-5.0, 5.0, 2001)
    p0 = 1.3
    psi = SampledWavefunction(g, np.exp(1j * p0 * g.x))
    F = fermi_from_wavefunction(psi)
    np.testing.assert_allclose(F.f[F.valid_mask], p0, atol=1e-8)
    np.testing.assert_allclose(F.g[F.valid_mask], 0.0, atol=1e-7)
    with pytest.raises(DegenerateCurveError, match="degenerate curve"):
        curve_from_fermi(F)

    # 1e-10 sits near the round-off floor of the 4th-order stencils; a
    # moderate p0*h keeps truncation below it
    g = Grid(-5.0, 5.0, 1001)
    psi = SampledWavefunction(g, np.exp(0.5j * g.x))
    exact = FermiFunction(g, np.full(g.n_points, 0.5), np.zeros(g.n_points), np.ones(g.n_points, bool))
    assert verify_fermi_operator(psi, exact) < 1e-10


def test_operator_residual_for_closed_forms():
    g = Grid(-6.0, 6.0, 10000)
    psi = make_squeezed_gaussian(1.0, 0.0, g)
    assert verify_fermi_operator(psi, gaussian_fermi_closed_form(1.0, 0.0).fermi_function(g)) < 1e-6
    g = Grid(-7.0, 7.0, 10000)
    h2 = make_hermite_state(2, 1.0, g)
    assert verify_fermi_operator(h2, hermite_fermi_closed_form(2, 1.0).fermi_function(g)) < 1e-6


def test_operator_residual_for_computed_pair():
    g = gaussian_grid(2.0)
    psi = make_squeezed_gaussian(2.0, 1.0, g)
    assert verify_fermi_operator(psi, fermi_from_wavefunction(psi)) < 1e-6


def test_operator_grid_mismatch():
    psi = make_squeezed_gaussian(1.0, 0.0, Grid(-6, 6, 101))
    with pytest.raises(ShapeError):
        verify_fermi_operator(psi, gaussian_fermi_closed_form(1.0, 0.0).fermi_function(Grid(-6, 6, 103)))


@given(st.floats(0.1, 10.0), st.floats(0, 2 * math.pi))
def test_fermi_pair_is_scale_invariant(mod, angle):
    g = gaussian_grid(1.0, n=2001)
    psi = make_squeezed_gaussian(1.0, 1.5, g)
    F0 = fermi_from_wavefunction(psi)
    F1 = fermi_from_wavefunction(psi.scaled(mod * complex(math.cos(angle), math.sin(angle))))
    np.testing.assert_array_equal(F0.valid_mask, F1.valid_mask)
    v = F0.valid_mask
    assert np.max(np.abs(F0.f[v] - F1.f[v])) < 1e-9
    assert np.max(np.abs(F0.g[v] - F1.g[v])) < 1e-9 * max(1.0, np.max(np.abs(F0.g[v])))


def test_eigenstate_pair_matches_potential():
    V = Potential.morse(8.0, 1.0)
    for n, right in ((0, 8.0), (2, 15.0)):
        E, psi = numerov_eigensolve(V, n, Grid(-1.5, right, 10001))
        F = fermi_from_wavefunction(psi)
        x = psi.grid.x
        # compare where psi is not deep in the tails
        keep = F.valid_mask & (np.abs(psi.values) > 1e-4 * np.max(np.abs(psi.values)))
        assert np.max(np.abs(F.g[keep] - 2 * (V(x[keep]) - E))) < 1e-4


def test_unit_circle_curve():
    g = gaussian_grid(1.0)
    C = curve_from_fermi(fermi_from_wavefunction(make_squeezed_gaussian(1.0, 0.0, g)))
    assert C.x_A == pytest.approx(-1.0, abs=1e-8) and C.x_B == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(C.p_plus, np.sqrt(np.clip(1 - C.x**2, 0, None)), atol=1e-5)


def test_curve_from_closed_form():
    g = Grid(-3.0, 3.0, 3001)
    F = QuadraticFermiForm(np.eye(2), 1.0).fermi_function(g)
    C = curve_from_fermi(F)
    np.testing.assert_allclose(C.p_plus, np.sqrt(np.clip(1 - C.x**2, 0, None)), atol=1e-6)
    np.testing.assert_allclose(C.p_minus, -C.p_plus, atol=1e-12)


@pytest.mark.parametrize("N", [1, 3])
def test_hermite_curve_is_ellipse(N):
    g = hermite_grid(N)
    C = curve_from_fermi(fermi_from_wavefunction(make_hermite_state(N, 1.0, g)))
    r2 = C.x**2 + C.p_plus**2
    assert np.max(np.abs(r2 - (2 * N + 1))) < 1e-4


def test_curve_errors():
    g = Grid(-3.0, 3.0, 601)
    ones = np.ones(g.n_points, bool)
    with pytest.raises(NoCurveError):
        curve_from_fermi(FermiFunction(g, np.zeros(g.n_points), g.x**2 + 1.0, ones))
    with pytest.raises(MultiWellError) as info:
        curve_from_fermi(FermiFunction(g, np.zeros(g.n_points), (g.x**2 - 1) ** 2 - 0.5, ones))
    assert len(info.value.intervals) == 2
    with pytest.raises(NoCurveError):
        curve_from_fermi(FermiFunction(g, np.zeros(g.n_points), g.x**2 - 100.0, ones))


def test_phase_curve_validation():
    x = np.linspace(-1, 1, 11)
    w = np.sqrt(1 - x**2)
    PhaseCurve(x, w, -w)
    with pytest.raises(InvalidCurveError):
        PhaseCurve(x, -w - 0.1, w)
    with pytest.raises(InvalidCurveError):
        PhaseCurve(x[::-1], w, -w)
    with pytest.raises(InvalidCurveError):
        PhaseCurve(x, w + 0.5, -w)


def test_curve_area_of_circles():
    for r in (0.5, 1.0, 3.0):
        x = r * np.cos(np.linspace(math.pi, 0, 2049))
        w = np.sqrt(np.clip(r * r - x**2, 0, None))
        assert curve_area(PhaseCurve(x, w, -w)) == pytest.approx(math.pi * r * r, rel=1e-9)


def test_curve_area_flags_inconsistent_polygon():
    # five coarse samples: the polygon badly underestimates the smooth area
    x = np.cos(np.linspace(math.pi, 0, 5))
    w = np.sqrt(np.clip(1 - x**2, 0, None))
    with pytest.raises(InconsistencyError):
        curve_area(PhaseCurve(x, w, -w))


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("b", [-2.0, 0.0, 1.0, 3.0])
def test_gaussian_area_is_half_h(a, b):
    g = gaussian_grid(a)
    C = curve_from_fermi(fermi_from_wavefunction(make_squeezed_gaussian(a, b, g)))
    assert abs(curve_area(C) / H - 0.5) < 1e-8


def test_gaussian_area_independent_of_parameters():
    areas = []
    for a in np.linspace(0.5, 3.0, 5):
        for b in np.linspace(-2.0, 2.0, 5):
            g = gaussian_grid(a)
            C = curve_from_fermi(fermi_from_wavefunction(make_squeezed_gaussian(a, b, g)))
            areas.append(curve_area(C))
    assert np.ptp(areas) < 1e-8 * H


@settings(max_examples=15)
@given(st.floats(0.4, 4.0), st.floats(-3.0, 3.0))
def test_gaussian_area_is_parameter_free(a, b):
    g = gaussian_grid(a)
    C = curve_from_fermi(fermi_from_wavefunction(make_squeezed_gaussian(a, b, g)))
    assert abs(curve_area(C) / H - 0.5) < 1e-8


def test_hermite_area_relation_to_ground():
    area0 = curve_area(curve_from_fermi(fermi_from_wavefunction(make_hermite_state(0, 1.0, hermite_grid(0)))))
    for N in (1, 4, 10):
        C = curve_from_fermi(fermi_from_wavefunction(make_hermite_state(N, 1.0, hermite_grid(N))))
        assert abs(curve_area(C) - area0 - N * H) < 1e-6 * H


def test_hermite_area_scales_with_hbar():
    c = PhysicalConstants(hbar=0.5)
    g = Grid(-5.0, 5.0, 20001)
    C = curve_from_fermi(fermi_from_wavefunction(make_hermite_state(2, 1.0, g, c), c))
    assert curve_area(C) / c.h == pytest.approx(2.5, abs=1e-6)


def test_quadratic_forms():
    F = gaussian_fermi_closed_form(1.0, 0.0)
    np.testing.assert_array_equal(F.M, np.eye(2))
    assert F.c == 1.0
    np.testing.assert_array_equal(gaussian_fermi_closed_form(1.0, 2.0).M, [[5.0, 2.0], [2.0, 1.0]])
    assert gaussian_fermi_closed_form(3.0, 7.0).det == pytest.approx(9.0, rel=1e-12)
    assert F.to_dict() == {"m11": 1.0, "m12": 0.0, "m22": 1.0, "c": 1.0}
    assert hermite_fermi_closed_form(3, 1.0).area() == pytest.approx(3.5 * H)


def test_factor_unimodular():
    np.testing.assert_array_equal(factor_unimodular(1.0, 0.0), np.eye(2))
    S = factor_unimodular(4.0, 2.0)
    np.testing.assert_allclose(S, [[2.0, 0.0], [1.0, 0.5]])
    assert np.linalg.det(S) == pytest.approx(1.0, abs=1e-12)
    S = factor_unimodular(2.0, 1.0)
    np.testing.assert_allclose(S.T @ (2.0 * np.eye(2)) @ S, gaussian_fermi_closed_form(2.0, 1.0).M, atol=1e-12)


@given(st.floats(0.01, 100.0), st.floats(-100.0, 100.0))
def test_unimodular_factor_properties(a, b):
    S = factor_unimodular(a, b)
    M = gaussian_fermi_closed_form(a, b).M
    assert abs(np.linalg.det(S) - 1.0) < 1e-12
    assert np.max(np.abs(S.T @ (a * np.eye(2)) @ S - M)) <= 1e-12 * np.max(np.abs(M))
    assert abs(np.linalg.det(M) - a * a) <= 1e-12 * max(1.0, np.max(np.abs(M)) ** 2)


def test_sparse_support_rejected():
    g = Grid(-40.0, 40.0, 8001)
    with pytest.raises(InsufficientSupportError):
        fermi_from_wavefunction(make_squeezed_gaussian(1.0, 0.0, g))
