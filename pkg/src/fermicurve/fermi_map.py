"""Forward direction: wave function -> Fermi function -> phase curve -> area.

Every twice-differentiable psi = R exp(iS/hbar) is annihilated by
``(-i hbar d/dx - f)^2 + g`` with ``f = S'`` and ``g = hbar^2 R''/R``. The
zero set of ``g_F(x, p) = (p - f(x))^2 + g(x)`` is the phase curve of psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DegenerateCurveError,
    InconsistencyError,
    InsufficientSupportError,
    InvalidCurveError,
    InvalidParameterError,
    MultiWellError,
    NoCurveError,
    ShapeError,
)
from .numerics import DEFAULT_TOL, ToleranceConfig, derivative_central, find_root_bracketed, integrate_adaptive, shoelace_area
from .states import MASK_THRESHOLD, Grid, PhysicalConstants, SampledWavefunction, _runs

__all__ = [
    "FermiFunction",
    "PhaseCurve",
    "QuadraticFermiForm",
    "fermi_from_wavefunction",
    "verify_fermi_operator",
    "curve_from_fermi",
    "curve_area",
    "gaussian_fermi_closed_form",
    "hermite_fermi_closed_form",
    "factor_unimodular",
]

# a sample sits "on a node" when it is this much smaller than its neighbours
_NODE_RATIO = 1e-2
_MAX_INFILL = 5
_MAX_MASKED_FRACTION = 0.30


@dataclass(frozen=True, eq=False)
class FermiFunction:
    """Samples of f = S' and g = hbar^2 R''/R.

    ``valid_mask`` marks samples where both are defined: unmasked points of
    psi plus node points filled by extrapolation. Elsewhere f and g are nan.
    """

    grid: Grid
    f: np.ndarray
    g: np.ndarray
    valid_mask: np.ndarray

    def __call__(self, x, p):
        """g_F(x, p) at grid-interpolated f, g."""
        xs = self.grid.x[self.valid_mask]
        f = np.interp(x, xs, self.f[self.valid_mask])
        g = np.interp(x, xs, self.g[self.valid_mask])
        return (np.asarray(p) - f) ** 2 + g


@dataclass(frozen=True, eq=False)
class PhaseCurve:
    """Closed curve p = p_plus(x), p = p_minus(x) on [x_A, x_B]."""

    x: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray

    def __post_init__(self):
        x, pp, pm = (np.asarray(a, dtype=float) for a in (self.x, self.p_plus, self.p_minus))
        if x.ndim != 1 or x.size < 3 or pp.shape != x.shape or pm.shape != x.shape:
            raise InvalidCurveError("curve needs >= 3 samples of x, p_plus, p_minus")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(pp)) and np.all(np.isfinite(pm))):
            raise InvalidCurveError("curve samples must be finite")
        if not np.all(np.diff(x) > 0):
            raise InvalidCurveError("curve abscissae must be strictly increasing")
        scale = max(float(np.max(np.abs(pp))), float(np.max(np.abs(pm))), 1e-300)
        bad = np.flatnonzero(pp < pm - 1e-12 * scale)
        if bad.size:
            raise InvalidCurveError(f"p_plus < p_minus at x={x[bad[0]]:.6g}")
        if abs(pp[0] - pm[0]) > 1e-6 * scale or abs(pp[-1] - pm[-1]) > 1e-6 * scale:
            raise InvalidCurveError("curve is not closed: p_plus != p_minus at an endpoint")
        for name, arr in (("x", x), ("p_plus", pp), ("p_minus", pm)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def x_A(self) -> float:
        return float(self.x[0])

    @property
    def x_B(self) -> float:
        return float(self.x[-1])

    def polygon(self) -> np.ndarray:
        """Closed polyline: upper branch left to right, lower branch back."""
        upper = np.column_stack([self.x, self.p_plus])
        lower = np.column_stack([self.x[-2:0:-1], self.p_minus[-2:0:-1]])
        return np.vstack([upper, lower])


@dataclass(frozen=True, eq=False)
class QuadraticFermiForm:
    """g_F(z) = z^T M z - c for z = (x, p)."""

    M: np.ndarray
    c: float

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.shape != (2, 2) or not np.allclose(M, M.T, rtol=0, atol=1e-14 * np.abs(M).max()):
            raise InvalidParameterError("M must be a symmetric 2x2 matrix")
        object.__setattr__(self, "M", M)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.M))

    def __call__(self, x, p):
        M = self.M
        return M[0, 0] * x * x + 2.0 * M[0, 1] * x * p + M[1, 1] * p * p - self.c

    def area(self) -> float:
        """Area of the ellipse z^T M z = c."""
        return math.pi * self.c / math.sqrt(self.det)

    def fermi_function(self, grid: Grid) -> FermiFunction:
        """The (f, g) pair of this form; needs M22 = 1."""
        M = self.M
        if M[1, 1] != 1.0:
            raise InvalidParameterError("fermi_function needs M22 = 1")
        x = grid.x
        f = -M[0, 1] * x
        g = (M[0, 0] - M[0, 1] ** 2) * x * x - self.c
        return FermiFunction(grid, f, g, np.ones(x.shape, dtype=bool))

    def to_dict(self) -> dict:
        return {"m11": float(self.M[0, 0]), "m12": float(self.M[0, 1]),
                "m22": float(self.M[1, 1]), "c": float(self.c)}


# -- forward map ----------------------------------------------------------------

def _near_node(amp: np.ndarray) -> np.ndarray:
    padded = np.pad(amp, 2, mode="edge")
    window = np.max(np.lib.stride_tricks.sliding_window_view(padded, 5), axis=1)
    return amp < _NODE_RATIO * window


def _rational_fit(xs, ys, xt):
    """[1/1] Pade (alpha + beta x)/(1 + gamma x) through three points."""
    x0 = xs[0]
    u = xs - x0
    A = np.column_stack([np.ones(3), u, -u * ys])
    try:
        alpha, beta, gamma = np.linalg.solve(A, ys)
    except np.linalg.LinAlgError:
        return None
    t = np.asarray(xt) - x0
    den = 1.0 + gamma * t
    if np.any(np.abs(den) < 1e-3):
        return None
    return (alpha + beta * t) / den


def _infill(x, y, start, stop):
    """Fill y[start:stop] from three points on each side of the run."""
    xt = x[start:stop]
    left = _rational_fit(x[start - 3:start], y[start - 3:start], xt)
    right = _rational_fit(x[stop:stop + 3], y[stop:stop + 3], xt)
    if left is None or right is None:
        return np.interp(xt, [x[start - 1], x[stop]], [y[start - 1], y[stop]])
    w = (xt - x[start - 1]) / (x[stop] - x[start - 1])
    return (1.0 - w) * left + w * right


def fermi_from_wavefunction(psi: SampledWavefunction,
                            constants: PhysicalConstants = PhysicalConstants()) -> FermiFunction:
    """Fermi pair (f, g) of a sampled wave function.

    Uses S' = hbar Im(psi'/psi) and R''/R = Re(psi''/psi) + (S'/hbar)^2, which
    only has removable singularities at nodes. Node samples are refilled by
    rational extrapolation from both sides; masked runs touching the grid
    ends (decayed tails) are left undefined.

    Raises:
        InsufficientSupportError: more than 30% of psi below threshold, or an
            interior masked run of 5 or more samples.
    """
    hbar = constants.hbar
    grid = psi.grid
    x = grid.x
    v = psi.values
    amp = np.abs(v)
    below = amp < MASK_THRESHOLD * amp.max()
    if below.mean() > _MAX_MASKED_FRACTION:
        raise InsufficientSupportError(
            f"{100 * below.mean():.0f}% of psi is below threshold; shrink the grid")
    masked = below | _near_node(amp)
    masked[:2] = masked[-2:] = True  # low-order edge stencils

    d1 = derivative_central(v, grid, 1)
    d2 = derivative_central(v, grid, 2)
    f = np.full(x.shape, np.nan)
    g = np.full(x.shape, np.nan)
    ok = ~masked
    r1 = d1[ok] / v[ok]
    r2 = d2[ok] / v[ok]
    f[ok] = hbar * r1.imag
    g[ok] = hbar**2 * (r2.real + r1.imag**2)

    supported = ok.copy()
    for start, stop in _runs(masked):
        if start == 0 or stop == x.size:
            continue
        if stop - start >= _MAX_INFILL or start < 3 or stop + 3 > x.size or masked[stop:stop + 3].any() \
                or masked[start - 3:start].any():
            raise InsufficientSupportError(
                f"psi vanishes on [{x[start]:.6g}, {x[stop - 1]:.6g}]; cannot bridge the gap")
        f[start:stop] = _infill(x, f, start, stop)
        g[start:stop] = _infill(x, g, start, stop)
        supported[start:stop] = True
    return FermiFunction(grid, f, g, supported)


def verify_fermi_operator(psi: SampledWavefunction, F: FermiFunction,
                          constants: PhysicalConstants = PhysicalConstants()) -> float:
    """max |[(-i hbar d/dx - f)^2 + g] psi| / max|psi| over F's valid points."""
    if psi.grid != F.grid:
        raise ShapeError("wave function and Fermi function live on different grids")
    hbar = constants.hbar
    v = psi.values
    f = np.where(F.valid_mask, F.f, 0.0)
    g = np.where(F.valid_mask, F.g, 0.0)
    d1 = derivative_central(v, psi.grid, 1)
    d2 = derivative_central(v, psi.grid, 2)
    dfv = derivative_central(f * v, psi.grid, 1)
    op = -hbar**2 * d2 + 1j * hbar * (dfv + f * d1) + f * f * v + g * v
    # only points whose whole 5-point stencil sees defined f
    inner = np.min(np.lib.stride_tricks.sliding_window_view(
        np.pad(F.valid_mask, 2, constant_values=False), 5), axis=1)
    return float(np.max(np.abs(op[inner])) / np.max(np.abs(v)))


def _cheb_lobatto(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n)
    x = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * k / (n - 1))
    x[0], x[-1] = a, b
    return x


def curve_from_fermi(F: FermiFunction, n_samples: int = 2049,
                     tol: ToleranceConfig = DEFAULT_TOL) -> PhaseCurve:
    """Phase curve p = f +- sqrt(-g) on the interval where g <= 0.

    Turning points are the roots of a cubic spline through g; the curve is
    sampled at Chebyshev-Lobatto abscissae so samples cluster at the ends.

    Raises:
        DegenerateCurveError: g vanishes identically (e.g. a plane wave).
        NoCurveError: g > 0 everywhere, or g <= 0 reaches the edge of support.
        MultiWellError: g <= 0 on several disjoint intervals.
    """
    runs = _runs(F.valid_mask)
    if len(runs) != 1:
        raise InsufficientSupportError("Fermi function support is not a single interval")
    start, stop = runs[0]
    x = F.grid.x[start:stop]
    f = F.f[start:stop]
    g = F.g[start:stop]

    span = x[-1] - x[0]
    hbar_scale = float(np.max(f * f)) + 1.0 / span**2
    if np.max(np.abs(g)) <= 1e-6 * hbar_scale:
        raise DegenerateCurveError("degenerate curve: g vanishes identically")
    neg_runs = _runs(g <= 0)
    if not neg_runs:
        raise NoCurveError("g > 0 everywhere: no phase curve")
    if len(neg_runs) > 1:
        intervals = [(float(x[a]), float(x[b - 1])) for a, b in neg_runs]
        raise MultiWellError(f"g <= 0 on {len(neg_runs)} disjoint intervals: {intervals}", intervals)
    a, b = neg_runs[0]
    if a == 0 or b == x.size:
        raise NoCurveError("curve is not closed inside the supported region")

    g_spline = CubicSpline(x, g)
    f_spline = CubicSpline(x, f)
    root = lambda t: float(g_spline(t))
    x_A = find_root_bracketed(root, x[a - 1], x[a], tol)
    x_B = find_root_bracketed(root, x[b - 1], x[b], tol)
    xs = _cheb_lobatto(x_A, x_B, n_samples)
    w = np.sqrt(np.clip(-g_spline(xs), 0.0, None))
    w[0] = w[-1] = 0.0
    fs = f_spline(xs)
    return PhaseCurve(xs, fs + w, fs - w)


def curve_area(C: PhaseCurve, tol: ToleranceConfig = DEFAULT_TOL, check: bool = True) -> float:
    """Enclosed area 2 * integral of the half-width (p_plus - p_minus)/2.

    The quadrature runs on a spline of the squared half-width (smooth where
    the half-width itself has square-root ends). With ``check`` the result
    must agree with the shoelace area of the sampled polygon to relative
    max(1e-6, rel_tol).

    Raises:
        InconsistencyError: quadrature and shoelace disagree.
    """
    half2 = (0.5 * (C.p_plus - C.p_minus)) ** 2
    spline = CubicSpline(C.x, half2)
    area = 2.0 * integrate_adaptive(lambda t: math.sqrt(max(float(spline(t)), 0.0)),
                                    C.x_A, C.x_B, tol, sqrt_ends=(True, True))
    if check:
        poly = shoelace_area(C.polygon())
        bound = max(1e-6, tol.rel_tol) * abs(area)
        if abs(poly - area) > bound:
            raise InconsistencyError(
                f"quadrature area {area!r} disagrees with polygon area {poly!r}")
    return area


# -- closed forms -----------------------------------------------------------------

def gaussian_fermi_closed_form(a: float, b: float,
                               constants: PhysicalConstants = PhysicalConstants()) -> QuadraticFermiForm:
    """Fermi form of exp(-(a + i b) x^2 / 2 hbar): M = [[a^2+b^2, b], [b, 1]], c = a hbar."""
    if not a > 0:
        raise InvalidParameterError(f"need a > 0, got {a}")
    M = np.array([[a * a + b * b, b], [b, 1.0]])
    return QuadraticFermiForm(M, a * constants.hbar)


def hermite_fermi_closed_form(N: int, omega: float,
                              constants: PhysicalConstants = PhysicalConstants()) -> QuadraticFermiForm:
    """Fermi form of the N-th Hermite function: p^2 + m^2 w^2 x^2 - (2N+1) m w hbar."""
    if not omega > 0 or N < 0:
        raise InvalidParameterError("need omega > 0 and N >= 0")
    m = constants.mass
    M = np.array([[(m * omega) ** 2, 0.0], [0.0, 1.0]])
    return QuadraticFermiForm(M, (2 * N + 1) * m * omega * constants.hbar)


def factor_unimodular(a: float, b: float) -> np.ndarray:
    """S with S^T diag(a, a) S = M and det S = 1."""
    if not a > 0:
        raise InvalidParameterError(f"need a > 0, got {a}")
    r = math.sqrt(a)
    return np.array([[r, 0.0], [b / r, 1.0 / r]])
