"""Backward direction: phase curve -> (f, g) -> (S, V) -> quantized psi.

A closed curve p = f(x) +- sqrt(-g(x)) fixes the phase gradient f = S' and
V - E = g / 2m on the interval it spans. The curve belongs to an eigenstate
only if its area satisfies the ground-state anchored quantization
condition; the amplitude R then solves the stationary equation in the
derived potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    ExtensionError,
    InvalidGaugePointError,
    InvalidParameterError,
    NotQuantizedError,
    ReconstructionError,
)
from .fermi_map import FermiFunction, PhaseCurve, _cheb_lobatto, curve_area, verify_fermi_operator
from .numerics import DEFAULT_TOL, ToleranceConfig
from .quantization import action_integral, numerov_eigensolve, suggest_grid, wkb_energy
from .states import Grid, PhysicalConstants, Potential, SampledWavefunction

__all__ = [
    "CurvePotentialBundle",
    "QuantizationCheck",
    "fg_from_curve",
    "potential_from_curve",
    "check_quantization",
    "reconstruct_wavefunction",
]

# Chebyshev-Lobatto nodes used when resampling an input curve
_RESAMPLE_POINTS = 2049
# residual (in units of the action) above which a curve counts as unquantized
DEFAULT_MAX_RESIDUAL = 1e-5
# verify_fermi_operator bound for an accepted reconstruction
_OPERATOR_BOUND = 1e-4


def fg_from_curve(C: PhaseCurve) -> tuple[np.ndarray, np.ndarray]:
    """(f, g) on ``C.x``: f is the branch midpoint, g minus the squared half-width."""
    f = 0.5 * (C.p_plus + C.p_minus)
    g = -(0.5 * (C.p_plus - C.p_minus)) ** 2
    return f, g


@dataclass(frozen=True, eq=False)
class CurvePotentialBundle:
    """Phase S and potential V read off a phase curve.

    ``x`` are the Chebyshev-Lobatto nodes on [x_A, x_B] carrying ``S``;
    :meth:`phase` and :meth:`phase_gradient` evaluate anywhere, continuing f
    linearly past the curve ends.
    """

    x: np.ndarray
    S: np.ndarray
    V: Potential
    E_ref: float
    gauge_x0: float
    curve: PhaseCurve
    _f: CubicSpline = field(repr=False)
    _F: CubicSpline = field(repr=False)

    @property
    def x_A(self) -> float:
        return float(self.x[0])

    @property
    def x_B(self) -> float:
        return float(self.x[-1])

    def phase_gradient(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.x_A, self.x_B
        out = self._f(np.clip(x, a, b))
        for end, mask in ((a, x < a), (b, x > b)):
            if np.any(mask):
                out = np.where(mask, self._f(end) + self._f(end, 1) * (x - end), out)
        return out

    def _antiderivative(self, x):
        a, b = self.x_A, self.x_B
        out = self._F(np.clip(x, a, b))
        for end, mask in ((a, x < a), (b, x > b)):
            if np.any(mask):
                d = x - end
                ext = self._F(end) + self._f(end) * d + 0.5 * self._f(end, 1) * d * d
                out = np.where(mask, ext, out)
        return out

    def phase(self, x):
        """S(x) = integral of f from ``gauge_x0`` to x."""
        x = np.asarray(x, dtype=float)
        return self._antiderivative(x) - self._antiderivative(np.asarray(self.gauge_x0))


@dataclass(frozen=True)
class QuantizationCheck:
    n: int | None
    residual: float
    E0: float
    value: float
    area: float
    E_ref: float

    def __iter__(self):
        # unpacks as (n, residual, E0)
        return iter((self.n, self.residual, self.E0))


def _end_curvature(x, v, end: int) -> float:
    """V'' near one end from a least-squares parabola over the outer 15% of the interval.

    Spline second derivatives at the very end inherit the finite-difference
    noise of g; the fit averages it out.
    """
    width = 0.15 * (x[-1] - x[0])
    sel = x <= x[0] + width if end == 0 else x >= x[-1] - width
    return 2.0 * float(np.polyfit(x[sel] - x[end], v[sel], 2)[0])


def potential_from_curve(C: PhaseCurve, E_ref: float | None = None, gauge_x0: float | None = None,
                         constants: PhysicalConstants = PhysicalConstants(),
                         n_samples: int = _RESAMPLE_POINTS) -> CurvePotentialBundle:
    """S and V from a phase curve.

    On [x_A, x_B], V = g / 2m + E_ref. Outside, V continues quadratically
    from each end with curvature max(|V''(end)|, m w^2), where m w^2 is the
    curvature of the parabola through the two ends and the minimum of V
    (exact for harmonic-type curves). ``E_ref`` defaults to the value that
    puts min V at zero; ``gauge_x0`` defaults to the curve midpoint.

    Raises:
        InvalidParameterError: E_ref <= 0.
        InvalidGaugePointError: gauge_x0 not finite.
        ExtensionError: V falls off outward at both ends.
    """
    mass = constants.mass
    x = _cheb_lobatto(C.x_A, C.x_B, n_samples)
    f_in, g_in = fg_from_curve(C)
    f = CubicSpline(C.x, f_in)(x)
    neg_g = np.clip(CubicSpline(C.x, -g_in)(x), 0.0, None)
    neg_g[0] = neg_g[-1] = 0.0
    g = -neg_g

    if E_ref is None:
        E_ref = float(np.max(neg_g)) / (2.0 * mass)
    if not E_ref > 0:
        raise InvalidParameterError(f"reference energy must be positive, got {E_ref}")
    if gauge_x0 is None:
        gauge_x0 = 0.5 * (C.x_A + C.x_B)
    if not math.isfinite(gauge_x0):
        raise InvalidGaugePointError("gauge point must be finite")

    v = g / (2.0 * mass) + E_ref
    spline = CubicSpline(x, v)
    slope_a, slope_b = float(spline(x[0], 1)), float(spline(x[-1], 1))
    if slope_a > 0 and slope_b < 0:
        raise ExtensionError("potential decreases outward at both curve ends; no confining extension")
    half = 0.5 * (x[-1] - x[0])
    depth = 0.5 * (v[0] + v[-1]) - float(np.min(v))
    k_est = 2.0 * depth / half**2
    curv = (max(abs(_end_curvature(x, v, 0)), k_est), max(abs(_end_curvature(x, v, -1)), k_est))
    V = Potential.tabulated(x, v, extension=curv)

    f_spline = CubicSpline(x, f)
    F = f_spline.antiderivative()
    bundle = CurvePotentialBundle(x, np.zeros_like(x), V, float(E_ref), float(gauge_x0),
                                  PhaseCurve(x, f + np.sqrt(neg_g), f - np.sqrt(neg_g)), f_spline, F)
    object.__setattr__(bundle, "S", bundle.phase(x))
    return bundle


def _ground_grid(bundle: CurvePotentialBundle, constants: PhysicalConstants, tol: ToleranceConfig) -> Grid:
    top = max(bundle.E_ref, wkb_energy(bundle.V, 1, constants, tol))
    return suggest_grid(bundle.V, top, constants)


def check_quantization(C: PhaseCurve, constants: PhysicalConstants = PhysicalConstants(),
                       tol: ToleranceConfig = DEFAULT_TOL, max_residual: float = DEFAULT_MAX_RESIDUAL,
                       bundle: CurvePotentialBundle | None = None) -> QuantizationCheck:
    """Is the curve the phase curve of an eigenstate, and of which level?

    Evaluates Area / 2 hbar - action(E0), with E0 the Numerov ground energy
    of the derived potential, and rounds it to the nearest n pi. Unpacks as
    ``(n, residual, E0)``; ``n`` is None when the residual exceeds
    ``max_residual`` or the area lies below the ground-state area.
    """
    if bundle is None:
        bundle = potential_from_curve(C, constants=constants)
    V = bundle.V
    E0, _ = numerov_eigensolve(V, 0, _ground_grid(bundle, constants, tol), constants, tol)
    area = curve_area(bundle.curve, tol)
    value = area / (2.0 * constants.hbar) - action_integral(V, E0, constants, tol)
    n = int(round(value / math.pi))
    residual = abs(value - n * math.pi)
    if n < 0 or residual > max_residual:
        n = None
    return QuantizationCheck(n, float(residual), float(E0), float(value), float(area), bundle.E_ref)


def reconstruct_wavefunction(C: PhaseCurve, gauge_x0: float | None = None, grid: Grid | None = None,
                             constants: PhysicalConstants = PhysicalConstants(),
                             tol: ToleranceConfig = DEFAULT_TOL, E_ref: float | None = None,
                             max_residual: float = DEFAULT_MAX_RESIDUAL):
    """psi = R exp(iS/hbar) for a quantized curve.

    R is the Numerov eigenfunction of the derived potential at the level the
    quantization check selects, solved on an internal grid and interpolated
    onto ``grid`` (default: the internal grid). Returns ``(psi, check, E_n)``.

    Raises:
        NotQuantizedError: the curve fails the quantization condition.
        ReconstructionError: the assembled psi does not satisfy the Fermi
            operator equation.
    """
    bundle = potential_from_curve(C, E_ref=E_ref, gauge_x0=gauge_x0, constants=constants)
    check = check_quantization(C, constants, tol, max_residual, bundle=bundle)
    if check.n is None:
        raise NotQuantizedError(
            f"curve is not quantized: residual {check.residual:.3g} from the nearest level", check.residual)
    n = check.n
    V = bundle.V
    inner = suggest_grid(V, max(bundle.E_ref, check.E0), constants)
    try:
        E_n, R = numerov_eigensolve(V, n, inner, constants, tol)
    except Exception as exc:
        raise ReconstructionError(f"no level {n} in the derived potential: {exc}") from exc

    xs = inner.x
    psi_inner = R.values.real * np.exp(1j * bundle.phase(xs) / constants.hbar)
    F = FermiFunction(inner, bundle.phase_gradient(xs), 2.0 * constants.mass * (V(xs) - E_n),
                      np.ones(xs.size, dtype=bool))
    resid = verify_fermi_operator(SampledWavefunction(inner, psi_inner), F, constants)
    if not resid < _OPERATOR_BOUND:
        raise ReconstructionError(f"Fermi operator residual {resid:.3g} for the reconstructed state")

    if grid is None:
        return SampledWavefunction(inner, psi_inner), check, float(E_n)
    x = grid.x
    r = CubicSpline(xs, R.values.real)(x)
    r[(x < xs[0]) | (x > xs[-1])] = 0.0
    psi = r * np.exp(1j * bundle.phase(x) / constants.hbar)
    return SampledWavefunction(grid, psi), check, float(E_n)
