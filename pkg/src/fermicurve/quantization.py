"""Turning points, action integrals and quantization rules for 1D wells.

Three rules are available:

* WKB / Bohr-Sommerfeld: ``int k dx = N pi``.
* Ma-Xu exact rule: ``int k dx - int chi (chi')^-1 k' dx = N pi`` with
  ``chi = psi'/psi`` and N the node count of chi in the allowed region.
* ground-state anchored rule (Qian-Dong): ``action(E_n) = action(E_0) + n pi``,
  exact for the harmonic oscillator and the Morse well.

``numerov_eigensolve`` is an independent shooting solver used both as the
ground-state provider and as the oracle the rules are checked against.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import (
    BracketFailureError,
    ConsistencyError,
    InputError,
    InvalidBracketError,
    NotSingleWellError,
)
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    count_sign_changes,
    derivative_central,
    find_root_bracketed,
    integrate_adaptive,
)
from .states import Grid, PhysicalConstants, Potential, SampledWavefunction

__all__ = [
    "ApproximateRuleWarning",
    "TurningPoints",
    "QuantizationReport",
    "Level",
    "Spectrum",
    "find_turning_points",
    "momentum_k",
    "action_integral",
    "suggest_grid",
    "numerov_eigensolve",
    "maxu_rule_evaluate",
    "wkb_energy",
    "qian_dong_solve",
    "spectrum",
]

log = logging.getLogger(__name__)

_SCAN_POINTS = 4001


class ApproximateRuleWarning(UserWarning):
    """The ground-state anchored rule is used outside the exactly solvable set."""


@dataclass(frozen=True)
class TurningPoints:
    x_A: float
    x_B: float
    energy: float


@dataclass(frozen=True)
class QuantizationReport:
    energy: float
    n_nodes_psi: int
    action: float
    maxu_correction: float
    maxu_residual: float
    wkb_residual: float
    riccati_residual: float
    x_A: float
    x_B: float

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "n_nodes_psi": self.n_nodes_psi,
            "action": self.action,
            "maxu_correction": self.maxu_correction,
            "maxu_residual": self.maxu_residual,
            "wkb_residual": self.wkb_residual,
            "riccati_residual": self.riccati_residual,
            "x_A": self.x_A,
            "x_B": self.x_B,
        }


@dataclass(frozen=True)
class Level:
    n: int
    energy: float
    method: str
    numerov_energy: float | None = None

    @property
    def delta(self) -> float | None:
        if self.numerov_energy is None:
            return None
        return self.energy - self.numerov_energy


@dataclass(frozen=True)
class Spectrum:
    levels: list[Level]
    ground_energy: float
    warnings: list[str] = field(default_factory=list)

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    def to_dict(self) -> dict:
        rows = []
        for lv in self.levels:
            row = {"n": lv.n, "E": lv.energy, "method": lv.method}
            if lv.numerov_energy is not None:
                row["numerov_E"] = lv.numerov_energy
                row["delta"] = lv.delta
            rows.append(row)
        out = {"ground_energy": self.ground_energy, "levels": rows}
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


# -- turning points and actions ---------------------------------------------------

def find_turning_points(V: Potential, E: float, search_domain=None,
                        tol: ToleranceConfig = DEFAULT_TOL) -> TurningPoints:
    """The two roots of V(x) = E bounding the allowed region.

    The domain is scanned on a dense grid (with the potential minimum added,
    so narrow wells are not skipped) and each sign change refined by Brent.

    Raises:
        NotSingleWellError: V - E does not change sign exactly twice.
    """
    lo, hi = search_domain if search_domain is not None else V.domain
    x = np.linspace(lo, hi, _SCAN_POINTS)
    x_min, _ = _cached_minimum(V)
    if lo < x_min < hi:
        x = np.insert(x, np.searchsorted(x, x_min), x_min)
    d = V(x) - E
    s = np.sign(d)
    change = np.flatnonzero(s[1:] * s[:-1] < 0)
    # exact zeros on the scan grid
    zeros = np.flatnonzero(d == 0.0)
    crossings = [float(x[i]) for i in change] + [float(x[i]) for i in zeros]
    if len(change) + len(zeros) != 2 or len(zeros):
        if len(zeros) == 2 and len(change) == 0:
            return TurningPoints(float(x[zeros[0]]), float(x[zeros[1]]), float(E))
        raise NotSingleWellError(
            f"V - E changes sign {len(crossings)} times on [{lo:g}, {hi:g}] at E={E:g}", sorted(crossings))
    i, j = change
    if d[i] < 0:
        raise NotSingleWellError(f"V < E at the edges of the search domain for E={E:g}", crossings)
    root = lambda t: float(V(t)) - E
    x_A = find_root_bracketed(root, x[i], x[i + 1], tol)
    x_B = find_root_bracketed(root, x[j], x[j + 1], tol)
    return TurningPoints(x_A, x_B, float(E))


_MIN_CACHE: dict[int, tuple[float, float]] = {}


def _cached_minimum(V: Potential) -> tuple[float, float]:
    key = id(V)
    hit = _MIN_CACHE.get(key)
    if hit is None or hit[0] is not V:
        hit = (V, V.minimum())
        _MIN_CACHE[key] = hit
    return hit[1]


def momentum_k(V: Potential, E: float, constants: PhysicalConstants = PhysicalConstants(), x=0.0):
    """k(x) = sqrt(2m |E - V(x)|) / hbar on both sides of the turning points."""
    return np.sqrt(2.0 * constants.mass * np.abs(E - V(x))) / constants.hbar


def _k_allowed(V, E, constants):
    c = 2.0 * constants.mass
    hbar = constants.hbar
    return lambda t: math.sqrt(max(c * (E - V(t)), 0.0)) / hbar


def action_integral(V: Potential, E: float, constants: PhysicalConstants = PhysicalConstants(),
                    tol: ToleranceConfig = DEFAULT_TOL, turning_points: TurningPoints | None = None) -> float:
    """Dimensionless action int_{x_A}^{x_B} k dx; the loop integral of p dx is 2 hbar times this."""
    tp = turning_points or find_turning_points(V, E, tol=tol)
    return integrate_adaptive(_k_allowed(V, E, constants), tp.x_A, tp.x_B, tol, sqrt_ends=(True, True))


def suggest_grid(V: Potential, E_max: float, constants: PhysicalConstants = PhysicalConstants(),
                 decay: float = 32.0, h_k: float = 0.02, min_points: int = 2001,
                 max_points: int = 80001) -> Grid:
    """Uniform grid for bound states up to ``E_max``.

    Extends beyond each turning point until the WKB decay exponent
    int kappa dx reaches ``decay`` (or the potential's domain ends) and uses
    a spacing with h * k_max <= ``h_k``.
    """
    tp = find_turning_points(V, E_max)
    lo_dom, hi_dom = V.domain
    c = 2.0 * constants.mass / constants.hbar**2

    def reach(x_tp, x_end):
        xs = np.linspace(x_tp, x_end, 20001)
        kappa = np.sqrt(np.clip(c * (V(xs) - E_max), 0.0, None))
        acc = np.abs(cumulative_trapezoid(kappa, xs, initial=0.0))
        idx = np.flatnonzero(acc >= decay)
        return float(xs[idx[0]]) if idx.size else float(x_end)

    left = reach(tp.x_A, lo_dom)
    right = reach(tp.x_B, hi_dom)
    _, v_min = _cached_minimum(V)
    k_max = math.sqrt(c * (E_max - v_min))
    n = int(math.ceil((right - left) * k_max / h_k)) + 1
    return Grid(left, right, min(max(n, min_points), max_points))


# -- Numerov shooting ---------------------------------------------------------------

def _shoot(w: list, stop: int):
    """March from index 0 (y0 = 0, y1 = 1) to ``stop``; return (y[stop-1], y[stop], sign changes)."""
    y0, y1 = 0.0, 1.0
    nodes = 0
    last = 1.0
    for i in range(1, stop):
        y2 = ((12.0 - 10.0 * w[i]) * y1 - w[i - 1] * y0) / w[i + 1]
        if y2 != 0.0:
            if (y2 > 0.0) != (last > 0.0):
                nodes += 1
            last = y2
        y0, y1 = y1, y2
        if abs(y1) > 1e200:
            y0 *= 1e-200
            y1 *= 1e-200
    return y0, y1, nodes


def _march_full(w: list) -> np.ndarray:
    n = len(w)
    y = np.zeros(n)
    y0, y1 = 0.0, 1.0
    y[1] = 1.0
    for i in range(1, n - 1):
        y2 = ((12.0 - 10.0 * w[i]) * y1 - w[i - 1] * y0) / w[i + 1]
        y[i + 1] = y2
        y0, y1 = y1, y2
        if abs(y1) > 1e200:
            y[: i + 2] *= 1e-200
            y0 *= 1e-200
            y1 *= 1e-200
    return y


def _level_ceiling(V: Potential, n: int, constants: PhysicalConstants, tol: ToleranceConfig) -> float:
    """An energy safely above level n: the WKB level N = n + 1, or just below the continuum."""
    try:
        return wkb_energy(V, n + 1, constants, tol)
    except BracketFailureError:
        top = V.ceiling
        return top - 1e-9 * max(abs(top), 1.0)


def numerov_eigensolve(V: Potential, n: int, grid: Grid | None = None,
                       constants: PhysicalConstants = PhysicalConstants(),
                       tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, SampledWavefunction]:
    """n-th bound state of -hbar^2/2m psi'' + V psi = E psi with psi = 0 at the grid ends.

    The energy is bracketed by bisection on the node count of the left-shot
    solution, then refined by Brent on the normalized discrete Wronskian of
    the left and right shots at the rightmost turning point. The returned
    eigenfunction has unit L2 norm and exactly ``n`` interior nodes.

    Raises:
        BracketFailureError: level ``n`` does not exist below the potential at
            the grid edges (grid not confining enough).
    """
    if int(n) != n or n < 0:
        raise InputError("level index must be a non-negative integer")
    n = int(n)
    if grid is None:
        grid = suggest_grid(V, _level_ceiling(V, n, constants, tol), constants)
    x = grid.x
    h = grid.spacing
    v = np.asarray(V(x), dtype=float)
    c = 2.0 * constants.mass / constants.hbar**2
    npts = x.size

    def weights(E):
        return (1.0 - (h * h / 12.0) * c * (v - E)).tolist()

    def count(E):
        return _shoot(weights(E), npts - 1)[2]

    lo = float(v.min())
    hi = float(min(v[0], v[-1]))
    c_lo, c_hi = count(lo), count(hi)
    if c_hi <= n:
        raise BracketFailureError(
            f"level {n} not found below the edge potential {hi:g}: only {c_hi} levels fit the grid")
    for _ in range(200):
        if c_lo == n and c_hi == n + 1:
            break
        mid = 0.5 * (lo + hi)
        c_mid = count(mid)
        if c_mid <= n:
            lo, c_lo = mid, c_mid
        else:
            hi, c_hi = mid, c_mid
    else:
        raise BracketFailureError(f"node-count bisection failed to isolate level {n}")

    E_mid = 0.5 * (lo + hi)
    allowed = np.flatnonzero(v <= E_mid)
    m = int(allowed[-1]) if allowed.size else int(np.argmin(v))
    m = min(max(m, 2), npts - 3)

    def mismatch(E):
        w = weights(E)
        a0, a1, _ = _shoot(w, m + 1)  # left values at m, m+1
        b0, b1, _ = _shoot(w[::-1], npts - 1 - m)  # right values at m+1, m
        return (a0 * b0 - a1 * b1) / (math.hypot(a0, a1) * math.hypot(b0, b1))

    try:
        E = find_root_bracketed(mismatch, lo, hi, ToleranceConfig(
            abs_tol=min(tol.abs_tol, 1e-13), rel_tol=tol.rel_tol, max_iterations=tol.max_iterations))
    except InvalidBracketError as exc:
        raise BracketFailureError(f"matching function has no sign change for level {n}: {exc}") from exc

    w = weights(E)
    left = _march_full(w[: m + 2])
    right = _march_full(w[::-1][: npts - m])[::-1]
    # right[0] sits at index m
    if abs(left[m]) >= abs(left[m + 1]):
        scale = left[m] / right[0]
    else:
        scale = left[m + 1] / right[1]
    psi = np.concatenate([left[: m + 1], scale * right[1:]])
    psi /= math.sqrt(float(np.sum(psi * psi) * h))
    big = np.flatnonzero(np.abs(psi) > 1e-3 * np.max(np.abs(psi)))
    if psi[big[0]] < 0:
        psi = -psi
    nodes = count_sign_changes(psi)
    if nodes != n:
        raise BracketFailureError(f"eigenfunction for level {n} has {nodes} nodes")
    return float(E), SampledWavefunction(grid, psi)


# -- Ma-Xu rule ---------------------------------------------------------------

def maxu_rule_evaluate(psi: SampledWavefunction, V: Potential, E: float,
                       constants: PhysicalConstants = PhysicalConstants(),
                       tol: ToleranceConfig = DEFAULT_TOL) -> QuantizationReport:
    """Evaluate both sides of the exact Ma-Xu condition for an eigenstate.

    The correction integrand chi k'/chi' is rewritten with the Riccati
    identity chi' = -(k^2 + chi^2) as m V' psi psi' / (hbar^2 k (k^2 psi^2 + psi'^2)),
    which is finite at the nodes of psi and has only a 1/sqrt singularity at
    the turning points.

    ``riccati_residual`` is max |psi'' + k^2 psi| / (k_max^2 max|psi|) over the
    allowed region.

    Raises:
        ConsistencyError: chi' >= 0 somewhere in the allowed region (psi is
            not an eigenstate at this energy).
    """
    hbar, mass = constants.hbar, constants.mass
    grid = psi.grid
    x = grid.x
    h = grid.spacing
    tp = find_turning_points(V, E, tol=tol)
    if tp.x_A < x[0] + 3 * h or tp.x_B > x[-1] - 3 * h:
        raise InputError("grid does not cover the allowed region")

    vals = psi.values
    phase = np.exp(-1j * np.angle(vals[np.argmax(np.abs(vals))]))
    y = (vals * phase).real
    d1 = derivative_central(y, grid, 1)
    d2 = derivative_central(y, grid, 2)
    k2 = 2.0 * mass * (E - V(x)) / hbar**2

    inside = (x >= tp.x_A) & (x <= tp.x_B)
    n_nodes = count_sign_changes(y[inside])

    # chi' = (psi'' psi - psi'^2) / psi^2 must be negative
    num = d2 * y - d1 * d1
    scale = np.max((k2 * y * y + d1 * d1)[inside])
    if np.any(num[inside] > 1e-6 * scale):
        raise ConsistencyError("chi' >= 0 in the allowed region: psi is not an eigenstate at this energy")
    k2_max = float(np.max(k2[inside]))
    riccati = float(np.max(np.abs(d2 + k2 * y)[inside]) / (k2_max * np.max(np.abs(y))))

    window = (x >= tp.x_A - 4 * h) & (x <= tp.x_B + 4 * h)
    s = y * d1 / (k2 * y * y + d1 * d1)
    s_spline = CubicSpline(x[window], s[window])
    k_of = _k_allowed(V, E, constants)

    def integrand(t):
        return mass * V.derivative(t) * float(s_spline(t)) / (hbar**2 * k_of(t))

    # the integrand is a spline of finite differences; asking for more than
    # ~1e-9 only makes the adaptive rule chase interpolation noise
    loose = ToleranceConfig(max(tol.abs_tol, 1e-9), max(tol.rel_tol, 1e-9), tol.max_iterations)
    correction = integrate_adaptive(integrand, tp.x_A, tp.x_B, loose, sqrt_ends=(True, True))
    action = action_integral(V, E, constants, tol, turning_points=tp)
    N = n_nodes + 1
    return QuantizationReport(
        energy=float(E),
        n_nodes_psi=n_nodes,
        action=action,
        maxu_correction=correction,
        maxu_residual=action - correction - N * math.pi,
        wkb_residual=action - N * math.pi,
        riccati_residual=riccati,
        x_A=tp.x_A,
        x_B=tp.x_B,
    )


# -- energy rules -----------------------------------------------------------------

def _curvature_scale(V: Potential, constants: PhysicalConstants) -> float:
    """hbar * omega of the harmonic approximation at the minimum (a step size)."""
    x0, _ = _cached_minimum(V)
    d = 1e-4 * max(1.0, abs(x0))
    curv = (V.derivative(x0 + d) - V.derivative(x0 - d)) / (2 * d)
    if not curv > 0:
        return constants.hbar
    return constants.hbar * math.sqrt(curv / constants.mass)


def _solve_action(V, target, E_start, constants, tol, what):
    """Smallest E > E_start with action(E) = target (action increases with E)."""
    _, v_min = _cached_minimum(V)
    ceiling = V.ceiling

    def F(E):
        if E <= v_min:
            return -target
        return action_integral(V, E, constants, tol) - target

    lo = max(E_start, v_min)
    step = _curvature_scale(V, constants)
    hi = lo + step
    for _ in range(200):
        if hi >= ceiling:
            top = ceiling - 1e-9 * max(abs(ceiling), 1.0)
            if top <= lo or F(top) < 0:
                raise BracketFailureError(f"{what}: action target {target:.6g} exceeds the bound-state range")
            hi = top
            break
        if F(hi) > 0:
            break
        lo, hi = hi, hi + step
        step *= 2.0
    else:
        raise BracketFailureError(f"{what}: could not bracket the energy")
    return find_root_bracketed(F, lo, hi, tol)


def wkb_energy(V: Potential, N: int, constants: PhysicalConstants = PhysicalConstants(),
               tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Energy with int k dx = N pi (Bohr-Sommerfeld without the Maslov 1/2)."""
    if int(N) != N or N < 1:
        raise InputError("WKB quantum number must be a positive integer")
    _, v_min = _cached_minimum(V)
    return _solve_action(V, N * math.pi, v_min, constants, tol, f"WKB level N={N}")


def qian_dong_solve(V: Potential, E0: float, n: int, constants: PhysicalConstants = PhysicalConstants(),
                    tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """E_n from action(E_n) = action(E_0) + n pi, anchored at the ground energy E0.

    Exact for the harmonic and Morse wells; elsewhere an
    :class:`ApproximateRuleWarning` is emitted and the result is approximate.
    """
    if int(n) != n or n < 1:
        raise InputError("excitation number must be a positive integer")
    if not V.exactly_solvable:
        warnings.warn(f"ground-state anchored rule is approximate for a {V.kind} potential",
                      ApproximateRuleWarning, stacklevel=2)
    target = action_integral(V, E0, constants, tol) + n * math.pi
    return _solve_action(V, target, E0, constants, tol, f"level n={n}")


def spectrum(V: Potential, n_max: int, grid: Grid | None = None,
             constants: PhysicalConstants = PhysicalConstants(), tol: ToleranceConfig = DEFAULT_TOL,
             oracle: bool = False) -> Spectrum:
    """Levels 0..n_max: E_0 by Numerov, the rest by the ground-state anchored rule.

    Levels beyond the last bound state are dropped with a warning. With
    ``oracle`` every level is also solved by Numerov and stored alongside.
    """
    notes = []
    if grid is None:
        grid0 = suggest_grid(V, wkb_energy(V, 1, constants, tol), constants)
    else:
        grid0 = grid
    E0, _ = numerov_eigensolve(V, 0, grid0, constants, tol)
    energies = [(0, E0, "numerov")]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ApproximateRuleWarning)
        for n in range(1, n_max + 1):
            try:
                E = qian_dong_solve(V, E0, n, constants, tol)
            except BracketFailureError as exc:
                notes.append(f"stopped at n={n}: {exc}")
                log.warning("spectrum truncated at n=%d: %s", n, exc)
                break
            energies.append((n, E, "qian_dong"))
    for w in caught:
        msg = str(w.message)
        if msg not in notes:
            notes.append(msg)
            warnings.warn(msg, ApproximateRuleWarning, stacklevel=2)

    levels = []
    if oracle:
        top = energies[-1][1]
        og = grid if grid is not None else suggest_grid(V, top, constants)
        for n, E, method in energies:
            En = E if n == 0 and og is grid0 else numerov_eigensolve(V, n, og, constants, tol)[0]
            levels.append(Level(n, E, method, En))
    else:
        levels = [Level(n, E, method) for n, E, method in energies]
    return Spectrum(levels, E0, notes)
