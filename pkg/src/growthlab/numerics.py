"""Small numerical toolbox: compensated sums, finite differences, quadrature,
line fits and smooth cutoff primitives.

Everything here is deterministic and free of global state.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import PrecisionError

EPS = float(np.finfo(np.float64).eps)


# ---------------------------------------------------------------------------
# Compensated summation
# ---------------------------------------------------------------------------

class KahanSum:
    """Compensated accumulator; works on scalars or numpy arrays elementwise."""

    __slots__ = ("total", "carry")

    def __init__(self, shape=None):
        if shape is None:
            self.total = 0.0
            self.carry = 0.0
        else:
            self.total = np.zeros(shape)
            self.carry = np.zeros(shape)

    def add(self, value):
        y = value - self.carry
        t = self.total + y
        self.carry = (t - self.total) - y
        self.total = t

    def value(self):
        # fold the pending compensation back in
        return self.total - self.carry

    def copy_value(self):
        v = self.value()
        return np.array(v, copy=True) if isinstance(v, np.ndarray) else v


# ---------------------------------------------------------------------------
# Finite differences with Richardson extrapolation
# ---------------------------------------------------------------------------

def _neville(values: Sequence[float], ratio: float, powers: Sequence[int]) -> float:
    """Extrapolate D(h), D(h/r), D(h/r^2), ... to h -> 0.

    `powers` lists the exponents of the leading error terms, e.g. (2, 4) for
    central differences, (1, 2) for one-sided stencils.
    """
    table = list(values)
    for level, p in enumerate(powers[: len(values) - 1], start=1):
        factor = ratio ** p
        new = []
        for i in range(len(table) - 1):
            new.append((factor * table[i + 1] - table[i]) / (factor - 1.0))
        table = new
    return table[0]


def _central_stencil(f: Callable[[float], float], x: float, order: int, h: float) -> float:
    m = order
    acc = 0.0
    for i in range(m + 1):
        acc += (-1.0) ** i * math.comb(m, i) * f(x + (m / 2.0 - i) * h)
    return acc / h ** m


def _one_sided_stencil(f, x: float, order: int, h: float, direction: int) -> float:
    # direction +1: forward from x; -1: backward from x
    m = order
    acc = 0.0
    for i in range(m + 1):
        acc += (-1.0) ** (m - i) * math.comb(m, i) * f(x + direction * i * h)
    return acc / (direction * h) ** m


def fd_derivative(f: Callable[[float], float], x: float, order: int,
                  h0: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Estimate the order-th derivative of f at x on [lo, hi].

    Uses central stencils with Richardson extrapolation over h0, h0/2, h0/4;
    falls back to one-sided stencils when x sits at (or too close to) a
    boundary so no stencil point ever crosses it.
    """
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    if order > 8:
        raise PrecisionError(
            "finite differences beyond order 8 are noise at double precision")
    span = hi - lo
    # choose the stencil side
    central_ok = (x - lo) > 1e-6 * span and (hi - x) > 1e-6 * span
    if central_ok:
        half_width = order / 2.0
        h = min(h0, 0.9 * (x - lo) / max(half_width, 1.0),
                0.9 * (hi - x) / max(half_width, 1.0))
        if h <= 0 or x + half_width * h == x:
            raise PrecisionError("step size underflow in finite differences")
        vals = [_central_stencil(f, x, order, h / 2 ** k) for k in range(3)]
        return _neville(vals, 2.0, (2, 4))
    direction = 1 if (x - lo) <= (hi - x) else -1
    room = (hi - x) if direction == 1 else (x - lo)
    h = min(h0, 0.9 * room / max(order, 1))
    if h <= 0 or x + direction * h == x:
        raise PrecisionError("step size underflow in finite differences")
    vals = [_one_sided_stencil(f, x, order, h / 2 ** k, direction) for k in range(3)]
    return _neville(vals, 2.0, (1, 2))


def default_fd_step(x: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Step size heuristic: 1e-2 * min(x-lo, hi-x, 0.1).

    Exactly at an endpoint the one-sided stencil uses a tighter 1e-4 step:
    flat displacements vanish faster than the noise floor there, while
    wider steps would read the tail of an adjacent smooth cutoff as signal.
    """
    interior = min(x - lo, hi - x)
    if interior <= 0.0:
        return 1e-4
    return 1e-2 * min(interior, 0.1)


# ---------------------------------------------------------------------------
# Adaptive Simpson quadrature
# ---------------------------------------------------------------------------

def _simpson(f, a, fa, b, fb, m, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     rel_tol: float = 1e-8, max_depth: int = 60) -> float:
    """Adaptive Simpson rule with interval halving.

    Raises PrecisionError if the recursion depth cap is reached before the
    local tolerance is met.
    """
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, fa, b, fb, m, fm)
    scale = max(abs(whole), 1e-300)
    return _adaptive_step(f, a, fa, b, fb, m, fm, whole,
                          rel_tol * scale, max_depth)


def _adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(f, a, fa, m, fm, lm, flm)
    right = _simpson(f, m, fm, b, fb, rm, frm)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    if depth <= 0:
        raise PrecisionError("adaptive quadrature did not converge (depth cap)")
    return (_adaptive_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + _adaptive_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1))


# ---------------------------------------------------------------------------
# Ordinary least squares on a line
# ---------------------------------------------------------------------------

def fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """OLS fit y = slope*x + intercept; returns (slope, intercept, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a line fit")
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    dy = y - ym
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise ValueError("degenerate abscissa: all x equal")
    slope = float(np.dot(dx, dy)) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(dy, dy))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-28 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return slope, intercept, r2


# ---------------------------------------------------------------------------
# Smooth cutoff primitives built from B(s) = exp(-1/s)
# ---------------------------------------------------------------------------

def _bump_kernel(s):
    """exp(-1/s) for s > 0, zero otherwise; flat at s = 0. Array-capable."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0.0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        out[pos] = np.exp(-1.0 / s[pos])
    return out


def _bump_kernel_deriv(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0.0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        sp = s[pos]
        out[pos] = np.exp(-1.0 / sp) / (sp * sp)
    return out


def smooth_rise(s):
    """Monotone C^inf step: 0 for s <= 0, 1 for s >= 1, flat at both ends."""
    s = np.asarray(s, dtype=float)
    sc = np.clip(s, 0.0, 1.0)
    b = _bump_kernel(sc)
    bm = _bump_kernel(1.0 - sc)
    return b / (b + bm)


def smooth_rise_deriv(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    out = np.zeros_like(s)
    sc = np.where(inside, s, 0.5)
    b = _bump_kernel(sc)
    bm = _bump_kernel(1.0 - sc)
    db = _bump_kernel_deriv(sc)
    dbm = _bump_kernel_deriv(1.0 - sc)
    denom = (b + bm) ** 2
    out = np.where(inside, (db * bm + b * dbm) / denom, 0.0)
    return out


def smooth_fall(s):
    """Mirror of smooth_rise: 1 for s <= 0 falling flat to 0 at s >= 1."""
    return smooth_rise(1.0 - np.asarray(s, dtype=float))


def smooth_fall_deriv(s):
    return -smooth_rise_deriv(1.0 - np.asarray(s, dtype=float))


def plateau_bump(x, support: tuple[float, float], plateau: tuple[float, float]):
    """Smooth bump: 1 on [plateau], 0 off (support), flat transitions.

    Requires support[0] < plateau[0] < plateau[1] < support[1].
    """
    a, b = support
    c, d = plateau
    x = np.asarray(x, dtype=float)
    up = smooth_rise((x - a) / (c - a))
    down = smooth_fall((x - d) / (b - d))
    return np.where(x < c, up, np.where(x > d, down, 1.0))


def plateau_bump_deriv(x, support: tuple[float, float], plateau: tuple[float, float]):
    a, b = support
    c, d = plateau
    x = np.asarray(x, dtype=float)
    up = smooth_rise_deriv((x - a) / (c - a)) / (c - a)
    down = smooth_fall_deriv((x - d) / (b - d)) / (b - d)
    return np.where(x < c, up, np.where(x > d, down, 0.0))


# ---------------------------------------------------------------------------
# Bisection on a monotone function
# ---------------------------------------------------------------------------

def bisect_increasing(f: Callable[[float], float], lo: float, hi: float,
                      target: float, tol: float, max_iter: int = 200) -> float:
    """Solve f(x) = target for increasing f; stops once |f(x)-target| <= tol."""
    flo, fhi = f(lo), f(hi)
    if flo > target + tol or fhi < target - tol:
        raise PrecisionError("bisection target outside bracketed range")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm - target) <= tol:
            return mid
        if fm < target:
            lo = mid
        else:
            hi = mid
    raise PrecisionError("bisection failed to reach tolerance in 200 halvings")


def bisect_sign_change(f: Callable[[float], float], lo: float, hi: float,
                       abs_tol: float, max_iter: int = 200) -> float:
    """Refine a sign change of f on [lo, hi] until |f| <= abs_tol."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("no sign change on the given bracket")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= abs_tol or hi - lo <= 4.0 * EPS * max(abs(lo), abs(hi)):
            return mid
        if (fm > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return mid
