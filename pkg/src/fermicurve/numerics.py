"""Scalar numerics kernels: quadrature, root finding, Numerov marching,
finite differences, node counting and polygon area.

All routines are pure functions. Grids are duck-typed: anything exposing
``x`` (sample array) and ``spacing`` works, which is what
:class:`fermicurve.states.Grid` provides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    InputError,
    InsufficientGridError,
    InvalidBracketError,
    NumerovOverflowError,
)

__all__ = [
    "ToleranceConfig",
    "integrate_adaptive",
    "find_root_bracketed",
    "numerov_integrate",
    "count_sign_changes",
    "shoelace_area",
    "derivative_central",
]

_EPS = np.finfo(float).eps
_OVERFLOW = 1e290


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances shared by the quadrature and root-finding kernels.

    ``max_iterations`` caps subinterval splits for quadrature and iterations
    for root finding.
    """

    abs_tol: float = 1e-11
    rel_tol: float = 1e-11
    max_iterations: int = 20000

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise InputError("tolerances must be positive")
        if int(self.max_iterations) < 1:
            raise InputError("max_iterations must be >= 1")


DEFAULT_TOL = ToleranceConfig()


# -- quadrature ---------------------------------------------------------------

def _simpson(fa, fm, fb, width):
    return width * (fa + 4.0 * fm + fb) / 6.0


def _regularized(func, width):
    """Wrap the t-space integrand so samples within ``delta`` of t = 0 come
    from a linear extrapolation.

    After the ``t**2`` substitution the integrand is smooth, but evaluating it
    very close to t = 0 means evaluating the original integrand at
    ``end + t**2``, which cancels catastrophically (and is 0 * inf at t = 0).
    """
    delta = 1e-4 * width
    g1 = func(delta)
    g2 = func(2.0 * delta)
    slope = (g2 - g1) / delta
    if not (math.isfinite(g1) and math.isfinite(g2)):
        raise InputError("integrand is not finite next to a flagged endpoint")

    def g(t):
        if t < delta:
            return g1 + (t - delta) * slope
        return func(t)

    return g


def _adaptive_simpson(func, a, b, tol: ToleranceConfig, panels: int = 16):
    """Adaptive Simpson on [a, b]; returns (value, splits used)."""
    edges = np.linspace(a, b, panels + 1)
    fx = {float(x): func(float(x)) for x in edges}
    stack = []
    coarse = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        lo, hi = float(lo), float(hi)
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        whole = _simpson(fx[lo], fm, fx[hi], hi - lo)
        coarse += whole
        stack.append((lo, hi, fx[lo], fm, fx[hi], whole))

    target = max(tol.abs_tol, tol.rel_tol * abs(coarse))
    total_width = b - a
    accepted = 0.0
    splits = 0
    while stack:
        lo, hi, flo, fm, fhi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = func(0.5 * (lo + mid))
        fr = func(0.5 * (mid + hi))
        left = _simpson(flo, fl, fm, mid - lo)
        right = _simpson(fm, fr, fhi, hi - mid)
        diff = left + right - whole
        local = target * (hi - lo) / total_width
        if abs(diff) <= 15.0 * local or (hi - lo) < 64 * _EPS * max(abs(lo), abs(hi), 1.0):
            accepted += left + right + diff / 15.0
            continue
        splits += 1
        if splits > tol.max_iterations:
            pending = sum(item[5] for item in stack) + left + right
            raise ConvergenceError(
                f"adaptive quadrature did not converge in {tol.max_iterations} splits",
                estimate=accepted + pending,
            )
        stack.append((lo, mid, flo, fl, fm, left))
        stack.append((mid, hi, fm, fr, fhi, right))
    return accepted, splits


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: ToleranceConfig = DEFAULT_TOL,
    sqrt_ends: tuple[bool, bool] = (False, False),
) -> float:
    """Integrate ``f`` over [a, b] by adaptive Simpson bisection.

    ``sqrt_ends`` flags endpoints where the integrand behaves like
    ``(x - end)**(+-1/2)`` (turning points). Those halves of the interval are
    integrated in ``t`` with ``x = end +- t**2``, which makes the integrand
    smooth.

    Raises:
        InputError: if ``a >= b``.
        ConvergenceError: if more than ``tol.max_iterations`` splits are needed;
            the exception carries the last estimate.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise InputError(f"integration interval must satisfy a < b, got [{a}, {b}]")
    left_sing, right_sing = sqrt_ends
    if not (left_sing or right_sing):
        return _adaptive_simpson(lambda x: float(f(x)), a, b, tol)[0]

    mid = 0.5 * (a + b)
    total = 0.0
    if left_sing:
        hi = math.sqrt(mid - a)
        g = _regularized(lambda t: 2.0 * t * float(f(a + t * t)), hi)
        total += _adaptive_simpson(g, 0.0, hi, tol)[0]
    else:
        total += _adaptive_simpson(lambda x: float(f(x)), a, mid, tol)[0]
    if right_sing:
        hi = math.sqrt(b - mid)
        g = _regularized(lambda t: 2.0 * t * float(f(b - t * t)), hi)
        total += _adaptive_simpson(g, 0.0, hi, tol)[0]
    else:
        total += _adaptive_simpson(lambda x: float(f(x)), mid, b, tol)[0]
    return total


# -- root finding ---------------------------------------------------------------

def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> float:
    """Brent's method on a sign-changing bracket.

    The returned root always lies inside [lo, hi]. Iteration stops when the
    bracket is narrower than ``2*(4*eps*|x| + abs_tol/2)`` or ``f`` hits zero.

    Raises:
        InvalidBracketError: if ``f(lo)`` and ``f(hi)`` share a sign.
        ConvergenceError: after ``tol.max_iterations`` iterations.
    """
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not (math.isfinite(fa) and math.isfinite(fb)) or fa * fb > 0:
        raise InvalidBracketError(
            f"no sign change on [{a}, {b}]: f(lo)={fa!r}, f(hi)={fb!r}"
        )
    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_iterations):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        xtol = 2.0 * _EPS * abs(b) + 0.5 * tol.abs_tol
        m = 0.5 * (c - b)
        if abs(m) <= xtol or fb == 0.0:
            return min(max(b, min(lo, hi)), max(lo, hi))
        if abs(e) >= xtol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(xtol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b += d if abs(d) > xtol else math.copysign(xtol, m)
        fb = float(f(b))
    raise ConvergenceError("Brent iteration limit reached", estimate=b)


# -- Numerov ------------------------------------------------------------------

def _numerov_weights(q, h):
    return 1.0 - (h * h / 12.0) * np.asarray(q, dtype=float)


def _march(w, y0, y1, rescale: bool):
    """March y[i+1] = ((12 - 10 w[i]) y[i] - w[i-1] y[i-1]) / w[i+1].

    Returns (y list, index of first overflow or None). With ``rescale`` the
    whole prefix is divided down instead of overflowing.
    """
    w = w.tolist()
    n = len(w)
    y = [0.0] * n
    y[0], y[1] = float(y0), float(y1)
    for i in range(1, n - 1):
        nxt = ((12.0 - 10.0 * w[i]) * y[i] - w[i - 1] * y[i - 1]) / w[i + 1]
        if not abs(nxt) < _OVERFLOW:
            if not rescale or not math.isfinite(nxt):
                return y, i
            scale = 1.0 / abs(nxt)
            for j in range(i + 1):
                y[j] *= scale
            nxt *= scale
        y[i + 1] = nxt
    return y, None


def numerov_integrate(Q, grid, y0: float, y1: float, direction: str = "forward") -> np.ndarray:
    """Solve ``y'' = Q(x) y`` on a uniform grid with the Numerov stencil.

    ``Q`` is a callable of the sample array or an array of samples. For
    ``direction="forward"`` the seeds are y at ``x[0]`` and ``x[1]``; for
    ``"backward"`` they are y at ``x[-1]`` and ``x[-2]``. The returned array is
    always ordered like ``grid.x``.

    Raises:
        NumerovOverflowError: when |y| grows past ~1e290; carries the index
            (in grid order) of the last valid sample.
    """
    x = np.asarray(grid.x, dtype=float)
    h = float(grid.spacing)
    q = np.asarray(Q(x) if callable(Q) else Q, dtype=float)
    if q.shape != x.shape:
        raise InputError("Q samples must match the grid")
    if not np.all(np.isfinite(q)):
        raise InputError("Q must be finite on the grid")
    if direction not in ("forward", "backward"):
        raise InputError(f"unknown direction {direction!r}")
    w = _numerov_weights(q, h)
    if direction == "backward":
        w = w[::-1]
    y, bad = _march(w, y0, y1, rescale=False)
    if bad is not None:
        last = bad if direction == "forward" else len(x) - 1 - bad
        raise NumerovOverflowError(f"Numerov solution overflowed near x={x[last]:.6g}", last)
    out = np.array(y)
    return out if direction == "forward" else out[::-1]


# -- finite differences -------------------------------------------------------

def derivative_central(samples, grid, order: int = 1) -> np.ndarray:
    """First or second derivative of uniformly spaced samples.

    Fourth-order central stencils in the interior, second-order stencils on
    the two outermost points of each side. Complex input is supported.
    """
    y = np.asarray(samples)
    if y.ndim != 1 or y.size < 5:
        raise InsufficientGridError("need at least 5 samples for central differences")
    h = float(grid.spacing)
    out = np.empty_like(y, dtype=np.result_type(y.dtype, float))
    if order == 1:
        out[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
        out[1] = (y[2] - y[0]) / (2.0 * h)
        out[-2] = (y[-1] - y[-3]) / (2.0 * h)
        out[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
        out[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    elif order == 2:
        h2 = h * h
        out[2:-2] = (-y[:-4] + 16.0 * y[1:-3] - 30.0 * y[2:-2] + 16.0 * y[3:-1] - y[4:]) / (12.0 * h2)
        out[1] = (y[0] - 2.0 * y[1] + y[2]) / h2
        out[-2] = (y[-3] - 2.0 * y[-2] + y[-1]) / h2
        out[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h2
        out[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / h2
    else:
        raise InputError("order must be 1 or 2")
    return out


# -- sign changes, polygon area -------------------------------------------------

def count_sign_changes(samples: Sequence[float], zero_threshold: float | None = None) -> int:
    """Count strict sign alternations, skipping entries with |v| < threshold.

    The default threshold is ``1e-9 * max|samples|``. A run of sub-threshold
    entries between two opposite signs counts as one change.

    Raises:
        DegenerateInputError: if every sample is below the threshold.
    """
    v = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InputError("samples must be finite")
    if zero_threshold is None:
        zero_threshold = 1e-9 * float(np.max(np.abs(v))) if v.size else 0.0
    kept = v[np.abs(v) >= zero_threshold]
    kept = kept[kept != 0.0]
    if kept.size == 0:
        raise DegenerateInputError("all samples are below the zero threshold")
    signs = np.sign(kept)
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def shoelace_area(points) -> float:
    """Absolute area enclosed by a closed polyline of (x, p) pairs.

    The closing edge is implied; a repeated first point is harmless.
    Self-intersecting polylines are not detected and give the signed-area sum.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InputError("need at least three (x, p) points")
    # centring reduces cancellation for curves far from the origin
    x = pts[:, 0] - pts[:, 0].mean()
    p = pts[:, 1] - pts[:, 1].mean()
    return 0.5 * abs(float(np.dot(x, np.roll(p, -1)) - np.dot(p, np.roll(x, -1))))
