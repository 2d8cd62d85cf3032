import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermicurve.errors import InputError, InvalidParameterError, TruncationError
from fermicurve.fermi_map import factor_unimodular
from fermicurve.states import Grid, PhysicalConstants, SampledWavefunction, make_hermite_state, make_squeezed_gaussian
from fermicurve.wigner import (
    PhaseSpaceGrid,
    wigner_fermi_relation_check,
    wigner_gaussian_closed,
    wigner_numeric,
)

from conftest import gaussian_grid, hermite_grid

SQUARE = PhaseSpaceGrid(-4.0, 4.0, 41, -4.0, 4.0, 41)


def full_plane(a, b):
    """Phase-space grid wide enough to hold the whole Gaussian Wigner function."""
    L = math.sqrt(42.0 / a) + 1.0
    P = 7.0 * math.sqrt(a + b * b / a) + 1.0
    return PhaseSpaceGrid(-L, L, 161, -P, P, 321)


def test_phase_space_grid_validation():
    with pytest.raises(InputError):
        PhaseSpaceGrid(-1, 1, 4, -1, 1, 10)
    with pytest.raises(InputError):
        PhaseSpaceGrid(-1, 1, 10, 1, -1, 10)


def test_ground_state_peak():
    psi = make_squeezed_gaussian(1.0, 0.0, gaussian_grid(1.0, n=4001))
    pg = PhaseSpaceGrid(-1.0, 1.0, 9, -1.0, 1.0, 9)
    W = wigner_numeric(psi, pg)
    assert W[4, 4] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-6)


@pytest.mark.parametrize("a, b", [(1.0, 0.0), (2.0, 1.0), (0.5, -2.0), (4.0, 3.0)])
def test_numeric_matches_closed_form(a, b):
    psi = make_squeezed_gaussian(a, b, gaussian_grid(a, n=4001))
    W = wigner_numeric(psi, SQUARE)
    form = wigner_gaussian_closed(a, b)
    assert np.max(np.abs(W - form.on_grid(SQUARE))) < 1e-6


def test_marginal_and_mass():
    a, b = 2.0, 1.0
    psi = make_squeezed_gaussian(a, b, gaussian_grid(a, n=4001))
    pg = full_plane(a, b)
    W = wigner_numeric(psi, pg)
    dp = (pg.p_max - pg.p_min) / (pg.np_ - 1)
    marginal = W.sum(axis=1) * dp
    density = np.abs(np.exp(-(a + 1j * b) * pg.x**2 / 2)) ** 2
    assert np.max(np.abs(marginal - density)) < 1e-6
    assert abs(W.sum() * pg.cell - psi.norm() ** 2) < 1e-6


@pytest.mark.parametrize("N", [0, 1, 3])
def test_hermite_mass_and_negativity(N):
    psi = make_hermite_state(N, 1.0, hermite_grid(N, n=4001))
    L = 7.0 + N / 3.0
    pg = PhaseSpaceGrid(-L, L, 161, -L, L, 161)
    W = wigner_numeric(psi, pg)
    assert abs(W.sum() * pg.cell - 1.0) < 1e-6
    if N >= 1:
        assert W.min() < 0
    else:
        assert W.min() > -1e-12


def test_truncated_state_rejected():
    g = Grid(-5.0, 5.0, 1001)
    with pytest.raises(TruncationError):
        wigner_numeric(SampledWavefunction(g, np.exp(1j * g.x)), SQUARE)


def test_scaled_hbar():
    c = PhysicalConstants(hbar=0.5)
    psi = make_squeezed_gaussian(1.0, 1.0, gaussian_grid(1.0, hbar=0.5, n=4001), c)
    W = wigner_numeric(psi, SQUARE, c)
    assert np.max(np.abs(W - wigner_gaussian_closed(1.0, 1.0, c).on_grid(SQUARE))) < 1e-6


def test_closed_form_examples():
    np.testing.assert_allclose(wigner_gaussian_closed(1.0, 0.0).G, np.eye(2), atol=1e-15)
    f = wigner_gaussian_closed(2.0, 1.0)
    np.testing.assert_allclose(f.G, [[2.5, 0.5], [0.5, 0.5]], atol=1e-15)
    assert f.det == pytest.approx(1.0, abs=1e-12)
    S = factor_unimodular(4.0, 2.0)
    np.testing.assert_allclose(wigner_gaussian_closed(4.0, 2.0).G, S.T @ S, atol=1e-12)
    assert f.prefactor == pytest.approx(1 / math.sqrt(2 * math.pi))
    with pytest.raises(InvalidParameterError):
        wigner_gaussian_closed(0.0, 1.0)


@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0))
def test_closed_form_is_unimodular(a, b):
    G = wigner_gaussian_closed(a, b).G
    assert abs(np.linalg.det(G) - 1.0) < 1e-12 * max(1.0, np.max(np.abs(G)) ** 2)
    assert np.all(np.linalg.eigvalsh(G) > 0)


def test_relation_unit_gaussian():
    r = wigner_fermi_relation_check(1.0, 0.0)
    assert r.exponent_residual == 0.0
    assert r.constant_ratio == pytest.approx(math.e, rel=1e-12)
    assert r.prefactor_spread < 1e-12


@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0))
def test_relation_exponent_identity(a, b):
    r = wigner_fermi_relation_check(a, b)
    assert r.exponent_residual < 1e-12 * max(1.0, a + b * b / a + 1 / a) * 9 * 4
    # W and exp(-g_F(Tz)/hbar) are proportional; the constant is reported only
    assert r.prefactor_spread < 1e-10


def test_relation_reports_prefactor():
    r = wigner_fermi_relation_check(2.0, 1.0)
    assert r.exponent_residual < 1e-12
    assert r.prefactor_ratio == pytest.approx(math.exp(-2.0) / math.sqrt(2 * math.pi), rel=1e-10)
