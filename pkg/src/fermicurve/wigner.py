"""Wigner transforms: numeric quadrature, the squeezed-Gaussian closed form,
and the exponent-level link between the Gaussian Wigner function and its
quadratic Fermi form."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InputError, InvalidParameterError, TruncationError
from .fermi_map import factor_unimodular, gaussian_fermi_closed_form
from .states import PhysicalConstants, SampledWavefunction

__all__ = [
    "PhaseSpaceGrid",
    "GaussianWignerForm",
    "WignerFermiReport",
    "wigner_numeric",
    "wigner_gaussian_closed",
    "wigner_fermi_relation_check",
]

EDGE_DECAY = 1e-8
_IMAG_BOUND = 1e-10


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_min: float
    x_max: float
    nx: int
    p_min: float
    p_max: float
    np_: int

    def __post_init__(self):
        if self.nx < 8 or self.np_ < 8:
            raise InputError("phase-space grid needs at least 8 points per axis")
        vals = (self.x_min, self.x_max, self.p_min, self.p_max)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("phase-space grid ranges must be finite")
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise InputError("phase-space grid ranges must be increasing")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np_)

    @property
    def cell(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1) * (self.p_max - self.p_min) / (self.np_ - 1)


@dataclass(frozen=True, eq=False)
class GaussianWignerForm:
    """W(z) = prefactor * exp(-z^T G z / hbar)."""

    prefactor: float
    G: np.ndarray
    hbar: float = 1.0

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.G))

    def evaluate(self, x, p):
        G = self.G
        q = G[0, 0] * x * x + 2.0 * G[0, 1] * x * p + G[1, 1] * p * p
        return self.prefactor * np.exp(-q / self.hbar)

    def on_grid(self, pg: PhaseSpaceGrid) -> np.ndarray:
        X, P = np.meshgrid(pg.x, pg.p, indexing="ij")
        return self.evaluate(X, P)


def wigner_numeric(psi: SampledWavefunction, pg: PhaseSpaceGrid,
                   constants: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """W(x, p) = (1 / 2 pi hbar) int exp(-i p y / hbar) psi(x + y/2) psi*(x - y/2) dy.

    Trapezoid quadrature in y with spacing twice the psi grid spacing (so
    on-grid x values need no interpolation) over |y| <= 1.5 * span. Off-grid
    psi values come from a cubic spline, zero outside the grid. Rows index
    x, columns index p.

    Raises:
        TruncationError: |psi| at the grid edges exceeds 1e-8 of its maximum.
        InputError: the quadrature leaves an imaginary part above 1e-10.
    """
    hbar = constants.hbar
    x_psi = psi.x
    v = psi.values
    peak = np.max(np.abs(v))
    if max(abs(v[0]), abs(v[-1])) > EDGE_DECAY * peak:
        raise TruncationError("wavefunction does not decay at the grid edges; Wigner integral truncated")
    span = x_psi[-1] - x_psi[0]
    dy = 2.0 * psi.grid.spacing
    half = int(math.ceil(1.5 * span / dy))
    y = dy * np.arange(-half, half + 1)
    weights = np.full(y.size, dy)
    weights[[0, -1]] *= 0.5
    # exp(-i p y / hbar): one row per p
    kernel = np.exp(-1j * np.outer(pg.p, y) / hbar)

    spline = CubicSpline(x_psi, v, extrapolate=False)

    def interp(t):
        return np.nan_to_num(spline(t))

    out = np.empty((pg.nx, pg.np_), dtype=complex)
    for i, x0 in enumerate(pg.x):
        prod = interp(x0 + 0.5 * y) * np.conj(interp(x0 - 0.5 * y))
        live = prod != 0
        out[i] = kernel[:, live] @ (weights[live] * prod[live])
    out /= 2.0 * math.pi * hbar
    resid = float(np.max(np.abs(out.imag)))
    if resid > _IMAG_BOUND * max(1.0, float(np.max(np.abs(out.real)))):
        raise InputError(f"Wigner quadrature left an imaginary part of {resid:.3g}")
    return out.real.copy()


def wigner_gaussian_closed(a: float, b: float,
                           constants: PhysicalConstants = PhysicalConstants()) -> GaussianWignerForm:
    """Wigner function of exp(-(a + i b) x^2 / 2 hbar) (unnormalized).

    G = S^T S with S the unimodular factor of the Fermi matrix, i.e.
    [[a + b^2/a, b/a], [b/a, 1/a]], and prefactor (pi hbar a)^(-1/2).
    """
    if not a > 0:
        raise InvalidParameterError(f"need a > 0, got {a}")
    S = factor_unimodular(a, b)
    G = S.T @ S
    hbar = constants.hbar
    return GaussianWignerForm(1.0 / math.sqrt(math.pi * hbar * a), G, hbar)


@dataclass(frozen=True)
class WignerFermiReport:
    """Comparison of W with exp(-g_F(Tz)/hbar), T = S^-1 D^-1/2 S.

    ``exponent_residual`` is max |z^T G z - (Tz)^T M (Tz)| over the sample
    grid. ``constant_ratio`` is exp(-g_F(Tz)/hbar) / exp(-z^T G z/hbar)
    = exp(c/hbar); ``prefactor_ratio`` is the full W / exp(-g_F(Tz)/hbar) and
    ``prefactor_spread`` its relative variation over the grid (zero when
    the two are proportional).
    """

    exponent_residual: float
    constant_ratio: float
    prefactor_ratio: float
    prefactor_spread: float

    def to_dict(self) -> dict:
        return {
            "exponent_residual": self.exponent_residual,
            "constant_ratio": self.constant_ratio,
            "prefactor_ratio": self.prefactor_ratio,
            "prefactor_spread": self.prefactor_spread,
        }


def wigner_fermi_relation_check(a: float, b: float, constants: PhysicalConstants = PhysicalConstants(),
                                half_width: float = 3.0, n: int = 41) -> WignerFermiReport:
    """Check that the Gaussian Wigner exponent is the Fermi form after rescaling.

    With M = S^T D S (D = a I) and T = S^-1 D^-1/2 S one has T^T M T = S^T S = G.
    The rescaled form is built from the matrices, not from that identity.
    """
    form = gaussian_fermi_closed_form(a, b, constants)
    W = wigner_gaussian_closed(a, b, constants)
    hbar = constants.hbar
    S = factor_unimodular(a, b)
    D_inv_half = np.eye(2) / math.sqrt(a)
    T = np.linalg.solve(S, D_inv_half @ S)

    t = np.linspace(-half_width, half_width, n)
    X, P = np.meshgrid(t, t, indexing="ij")
    Z = np.stack([X.ravel(), P.ravel()])
    TZ = T @ Z
    quad_G = np.einsum("ik,ij,jk->k", Z, W.G, Z)
    quad_M = np.einsum("ik,ij,jk->k", TZ, form.M, TZ)
    residual = float(np.max(np.abs(quad_G - quad_M)))

    gF = form(TZ[0], TZ[1])
    # log-space ratios avoid underflow far from the origin
    log_const = -gF / hbar + quad_G / hbar
    log_full = math.log(W.prefactor) - quad_G / hbar + gF / hbar
    ratio = float(np.exp(np.median(log_const)))
    full = float(np.exp(np.median(log_full)))
    spread = float(np.max(np.abs(np.expm1(log_full - math.log(full)))))
    return WignerFermiReport(residual, ratio, full, spread)
