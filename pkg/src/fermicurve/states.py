"""Grids, wave-function containers, polar decomposition, potentials and the
analytic states (squeezed Gaussians, Hermite functions)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import InputError, InvalidGaugePointError, InvalidParameterError, RangeError
from .numerics import derivative_central

__all__ = [
    "PhysicalConstants",
    "Grid",
    "SampledWavefunction",
    "PolarDecomposition",
    "Potential",
    "make_squeezed_gaussian",
    "hermite_polynomial",
    "make_hermite_state",
    "polar_decompose",
    "HERMITE_MAX_ORDER",
    "MASK_THRESHOLD",
]

HERMITE_MAX_ORDER = 50
# |psi| below this fraction of max|psi| counts as zero
MASK_THRESHOLD = 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise InvalidParameterError("hbar and mass must be positive")

    @property
    def h(self) -> float:
        """Planck's constant, 2*pi*hbar."""
        return 2.0 * math.pi * self.hbar


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_points`` samples on [x_min, x_max]."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise InputError("grid requires x_min < x_max")
        if int(self.n_points) < 5:
            raise InputError("grid requires at least 5 points")
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def index_of(self, x0: float) -> int:
        """Index of the grid point nearest to ``x0``."""
        i = int(round((x0 - self.x_min) / self.spacing))
        return min(max(i, 0), self.n_points - 1)


@dataclass(frozen=True, eq=False)
class SampledWavefunction:
    """Complex samples of psi on a uniform grid; normalization is arbitrary."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise InputError("wavefunction values must match the grid")
        if not np.all(np.isfinite(v)):
            raise InputError("wavefunction values must be finite")
        if not np.max(np.abs(v)) > 0:
            raise InputError("wavefunction is identically zero")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self) -> float:
        """L2 norm by Simpson's rule (trapezoid for even point counts)."""
        from scipy.integrate import simpson

        return math.sqrt(float(simpson(np.abs(self.values) ** 2, dx=self.grid.spacing)))

    def overlap(self, other: "SampledWavefunction") -> float:
        """|<self, other>| / (||self|| ||other||) on a common grid."""
        from scipy.integrate import simpson

        if other.grid != self.grid:
            other = other.resample(self.grid)
        inner = simpson(np.conj(self.values) * other.values, dx=self.grid.spacing)
        return float(abs(inner) / (self.norm() * other.norm()))

    def resample(self, grid: Grid) -> "SampledWavefunction":
        re = CubicSpline(self.x, self.values.real, extrapolate=False)(grid.x)
        im = CubicSpline(self.x, self.values.imag, extrapolate=False)(grid.x)
        return SampledWavefunction(grid, np.nan_to_num(re + 1j * im))

    def scaled(self, factor: complex) -> "SampledWavefunction":
        return SampledWavefunction(self.grid, factor * self.values)


@dataclass(frozen=True, eq=False)
class PolarDecomposition:
    """psi = R exp(i (S/hbar + phase_offset)).

    ``S`` is anchored to vanish at the gauge point; ``phase_offset`` is the
    constant phase of psi there, kept so the decomposition is lossless.
    """

    grid: Grid
    R: np.ndarray
    S: np.ndarray
    valid_mask: np.ndarray
    gauge_x0: float
    phase_offset: float
    hbar: float

    def reconstruct(self) -> np.ndarray:
        return self.R * np.exp(1j * (self.S / self.hbar + self.phase_offset))


# -- potentials -----------------------------------------------------------------

_SOLVABLE = ("harmonic", "morse")


@dataclass(frozen=True, eq=False)
class Potential:
    """Evaluable potential V(x).

    Built with the classmethods :meth:`harmonic`, :meth:`morse`,
    :meth:`polynomial` and :meth:`tabulated`. ``domain`` is the interval
    searched for turning points and used to bound automatic grids.
    """

    kind: str
    params: dict
    domain: tuple[float, float]
    _spline: CubicSpline | None = field(default=None, repr=False)

    @classmethod
    def harmonic(cls, omega: float = 1.0, mass: float = 1.0) -> "Potential":
        if not (omega > 0 and mass > 0):
            raise InvalidParameterError("harmonic potential needs omega > 0 and mass > 0")
        span = 30.0 / math.sqrt(mass * omega)
        return cls("harmonic", {"omega": float(omega), "mass": float(mass)}, (-span, span))

    @classmethod
    def morse(cls, depth: float, width: float, center: float = 0.0) -> "Potential":
        if not (depth > 0 and width > 0):
            raise InvalidParameterError("Morse potential needs depth > 0 and width > 0")
        dom = (center - 4.0 / width, center + 60.0 / width)
        return cls("morse", {"D": float(depth), "alpha": float(width), "x_e": float(center)}, dom)

    @classmethod
    def polynomial(cls, coefficients: Sequence[float], domain=(-20.0, 20.0)) -> "Potential":
        """V(x) = sum_k c_k x**k (coefficients in increasing order)."""
        c = [float(v) for v in coefficients]
        if not c:
            raise InvalidParameterError("polynomial needs at least one coefficient")
        return cls("polynomial", {"coefficients": c}, (float(domain[0]), float(domain[1])))

    @classmethod
    def tabulated(cls, x, samples, extension: str | tuple = "quadratic", margin: float = 20.0) -> "Potential":
        """Cubic-spline interpolant of (x, V) samples.

        Outside the table V continues as a quadratic matching value and slope
        at each end. ``extension`` is either ``"quadratic"`` (curvature taken
        as max(V'', 0) at the end) or a pair ``(c_left, c_right)`` of explicit
        curvatures. ``domain`` spans ``margin`` table-widths on each side.
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(samples, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 4:
            raise InputError("tabulated potential needs matching x and V arrays of length >= 4")
        if not np.all(np.diff(x) > 0):
            raise InputError("tabulated abscissae must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise InputError("tabulated potential values must be finite")
        spline = CubicSpline(x, v)
        d2 = spline.derivative(2)
        if extension == "quadratic":
            curv = (max(float(d2(x[0])), 0.0), max(float(d2(x[-1])), 0.0))
        else:
            curv = (float(extension[0]), float(extension[1]))
            if min(curv) < 0:
                raise InvalidParameterError("extension curvatures must be non-negative")
        width = x[-1] - x[0]
        params = {
            "x": x,
            "V": v,
            "left": (x[0], float(v[0]), float(spline(x[0], 1)), curv[0]),
            "right": (x[-1], float(v[-1]), float(spline(x[-1], 1)), curv[1]),
        }
        dom = (x[0] - margin * width, x[-1] + margin * width)
        return cls("tabulated", params, dom, spline)

    # evaluation
    def __call__(self, x):
        return self._eval(x, 0)

    def derivative(self, x):
        return self._eval(x, 1)

    def _eval(self, x, nu: int):
        xa = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "harmonic":
            k = p["mass"] * p["omega"] ** 2
            out = 0.5 * k * xa**2 if nu == 0 else k * xa
        elif self.kind == "morse":
            e = np.exp(-p["alpha"] * (xa - p["x_e"]))
            if nu == 0:
                out = p["D"] * (1.0 - e) ** 2
            else:
                out = 2.0 * p["D"] * p["alpha"] * e * (1.0 - e)
        elif self.kind == "polynomial":
            c = np.polynomial.Polynomial(p["coefficients"])
            out = (c if nu == 0 else c.deriv())(xa)
        else:
            out = self._eval_tabulated(xa, nu)
        if np.ndim(x) == 0:
            return float(np.reshape(out, -1)[0])
        return out

    def _eval_tabulated(self, xa, nu):
        xt = self.params["x"]
        xa = np.atleast_1d(xa)
        out = np.asarray(self._spline(np.clip(xa, xt[0], xt[-1]), nu), dtype=float)
        for side, mask in (("left", xa < xt[0]), ("right", xa > xt[-1])):
            if np.any(mask):
                x0, v0, s0, c0 = self.params[side]
                d = xa[mask] - x0
                out[mask] = v0 + s0 * d + 0.5 * c0 * d * d if nu == 0 else s0 + c0 * d
        return out

    @property
    def exactly_solvable(self) -> bool:
        """Whether the ground-state anchored quantization rule is exact here."""
        return self.kind in _SOLVABLE

    @property
    def ceiling(self) -> float:
        """Lowest asymptotic value of V; bound states lie below it."""
        if self.kind == "morse":
            return self.params["D"]
        if self.kind == "polynomial":
            c = np.trim_zeros(np.asarray(self.params["coefficients"]), "b")
            if c.size < 2 or (c.size - 1) % 2 == 1 or c[-1] < 0:
                return float(min(self(self.domain[0]), self(self.domain[1])))
        if self.kind == "tabulated":
            left, right = self.params["left"], self.params["right"]
            lim = []
            for (x0, v0, s0, c0), outward in ((left, -1.0), (right, 1.0)):
                if c0 > 0:
                    lim.append(math.inf)
                elif s0 * outward > 0:
                    lim.append(math.inf)
                else:
                    lim.append(v0)
            return float(min(lim))
        return math.inf

    def minimum(self) -> tuple[float, float]:
        """(x_min, V_min) over ``domain`` by dense sampling then golden refinement."""
        from scipy.optimize import minimize_scalar

        lo, hi = self.domain
        x = np.linspace(lo, hi, 20001)
        v = self(x)
        i = int(np.argmin(v))
        a, b = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
        if a == b:
            return float(x[i]), float(v[i])
        res = minimize_scalar(self.__call__, bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(x[i]))})
        if res.fun < v[i]:
            return float(res.x), float(res.fun)
        return float(x[i]), float(v[i])

    def describe(self) -> dict:
        if self.kind == "tabulated":
            return {"kind": "tabulated", "n_samples": int(self.params["x"].size)}
        return {"kind": self.kind, **self.params}


# -- analytic states ----------------------------------------------------------------

def make_squeezed_gaussian(a: float, b: float, grid: Grid,
                           constants: PhysicalConstants = PhysicalConstants()) -> SampledWavefunction:
    """Unnormalized squeezed state exp(-(a + i b) x^2 / 2 hbar)."""
    if not a > 0:
        raise InvalidParameterError(f"squeezed Gaussian needs a > 0, got {a}")
    x = grid.x
    return SampledWavefunction(grid, np.exp(-(a + 1j * b) * x**2 / (2.0 * constants.hbar)))


def hermite_polynomial(N: int, x):
    """Physicists' Hermite polynomial H_N by the three-term recurrence."""
    if int(N) != N or N < 0:
        raise InvalidParameterError("Hermite order must be a non-negative integer")
    if N > HERMITE_MAX_ORDER:
        raise RangeError(f"Hermite order {N} exceeds the supported bound {HERMITE_MAX_ORDER}")
    xa = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(xa), 2.0 * xa
    if N == 0:
        out = prev
    else:
        for k in range(1, int(N)):
            prev, cur = cur, 2.0 * xa * cur - 2.0 * k * prev
        out = cur
    return float(out) if np.ndim(out) == 0 else out


def make_hermite_state(N: int, omega: float, grid: Grid,
                       constants: PhysicalConstants = PhysicalConstants()) -> SampledWavefunction:
    """Hermite function h_N(Q), Q = sqrt(m omega / hbar) x, unit norm in Q.

    Warns when the grid truncates the state (edge amplitude above 1e-8 of max).
    """
    if not omega > 0:
        raise InvalidParameterError("omega must be positive")
    q = math.sqrt(constants.mass * omega / constants.hbar) * grid.x
    log_norm = -0.5 * (0.5 * math.log(math.pi) + N * math.log(2.0) + math.lgamma(N + 1))
    values = hermite_polynomial(N, q) * np.exp(log_norm - 0.5 * q * q)
    peak = np.max(np.abs(values))
    if max(abs(values[0]), abs(values[-1])) > 1e-8 * peak:
        warnings.warn(f"grid truncates the Hermite state h_{N}; widen the grid", RuntimeWarning, stacklevel=2)
    return SampledWavefunction(grid, values)


# -- polar decomposition ---------------------------------------------------------

def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, stop) index ranges where ``mask`` is true."""
    m = np.concatenate(([False], mask, [False]))
    d = np.diff(m.astype(int))
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def phase_gradient(psi: SampledWavefunction, hbar: float) -> np.ndarray:
    """S' = hbar Im(psi'/psi); undefined (nan) where psi is masked."""
    v = psi.values
    dv = derivative_central(v, psi.grid, 1)
    mask = np.abs(v) >= MASK_THRESHOLD * np.max(np.abs(v))
    out = np.full(v.shape, np.nan)
    out[mask] = hbar * np.imag(dv[mask] / v[mask])
    return out


def polar_decompose(psi: SampledWavefunction, constants: PhysicalConstants = PhysicalConstants(),
                    gauge_x0: float = 0.0) -> PolarDecomposition:
    """Split psi into amplitude R = |psi| and a continuous phase action S.

    S is obtained by integrating S' = hbar Im(psi'/psi) from ``gauge_x0``;
    the integral only selects the branch of arg(psi), so the final S is exact
    to rounding. Across masked points (nodes) S may jump; it is continuous on
    every unmasked run.

    Raises:
        InvalidGaugePointError: if psi is masked at ``gauge_x0``.
    """
    hbar = constants.hbar
    grid = psi.grid
    x = grid.x
    v = psi.values
    R = np.abs(v)
    valid = R >= MASK_THRESHOLD * R.max()
    if not grid.x_min <= gauge_x0 <= grid.x_max:
        raise InvalidGaugePointError(f"gauge point {gauge_x0} lies outside the grid")
    i0 = grid.index_of(gauge_x0)
    if not valid[i0]:
        raise InvalidGaugePointError(f"psi vanishes at the gauge point x0={gauge_x0}")

    ds = phase_gradient(psi, hbar)
    idx = np.arange(x.size)
    ds = np.interp(idx, idx[valid], ds[valid])  # bridge masked runs
    s_int = cumulative_trapezoid(ds, x, initial=0.0)
    s_int -= np.interp(gauge_x0, x, s_int)

    arg = np.angle(v)
    lag = s_int / hbar - arg
    # common offset: phase mismatch at the gauge point's neighbourhood
    nb = idx[max(i0 - 2, 0): i0 + 3]
    nb = nb[valid[nb]]
    delta = float(np.angle(np.mean(np.exp(1j * lag[nb]))))

    S = s_int.copy()
    for start, stop in _runs(valid):
        seg = slice(start, stop)
        # extra constant phase picked up across nodes (e.g. pi for a sign flip)
        beta = float(np.angle(np.mean(np.exp(1j * (lag[seg] - delta)))))
        if start <= i0 < stop:
            beta = 0.0
        k = np.round((lag[seg] - delta - beta) / (2.0 * np.pi))
        S[seg] = hbar * (arg[seg] + delta + 2.0 * np.pi * k)
    # S is now exact on the grid; pin S(x0) = 0 by local interpolation
    win = idx[max(i0 - 4, 0): i0 + 5]
    win = win[valid[win]]
    s0 = float(CubicSpline(x[win], S[win])(gauge_x0)) if win.size >= 4 else float(S[i0])
    S -= s0
    return PolarDecomposition(grid, R, S, valid, float(gauge_x0), s0 / hbar - delta, hbar)
