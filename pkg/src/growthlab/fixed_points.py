"""Fixed-point detection and classification by tangency order.

A fixed point is `hyperbolic` when its multiplier differs from 1, `parabolic`
of order k when the displacement's first k-1 derivatives vanish but the k-th
does not, and `flat` when every derivative up to the probe cap (order 8) is
numerically zero.  Runs where the displacement vanishes identically are
reported as fixed intervals rather than classified pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffeo import DiffeoSpec, derivative
from .errors import PrecisionError
from .numerics import bisect_sign_change

MAX_PROBE_ORDER = 8
DEFAULT_LOCATION_TOL = 1e-9
DEFAULT_MULTIPLIER_TOL = 1e-5


@dataclass(frozen=True)
class Hyperbolic:
    multiplier: float
    kind: str = "hyperbolic"


@dataclass(frozen=True)
class Parabolic:
    order: int
    coefficient: float  # order-th derivative of the displacement
    kind: str = "parabolic"


@dataclass(frozen=True)
class Flat:
    order: int  # flat to (at least) this derivative order
    kind: str = "flat"


Stratum = Hyperbolic | Parabolic | Flat


@dataclass(frozen=True)
class FixedPoint:
    location: float
    stratum: Stratum


@dataclass(frozen=True)
class FixedPointScan:
    points: tuple[float, ...]
    fixed_intervals: tuple[tuple[float, float], ...]
    grid_size: int


@dataclass(frozen=True)
class FixedPointReport:
    points: tuple[FixedPoint, ...]
    fixed_intervals: tuple[tuple[float, float], ...]
    max_abs_log_multiplier: float  # 0 exactly when no hyperbolic point exists
    detection_grid: int


def find_fixed_points(spec: DiffeoSpec, grid_size: int = 2048,
                      tol: float = DEFAULT_LOCATION_TOL) -> FixedPointScan:
    """Locate zeros of the displacement on a uniform probe grid.

    Interior sign changes are bisected to |phi| <= tol; detections closer than
    2/grid_size are merged.  Runs of exactly-zero probes become fixed
    intervals, except runs touching an endpoint, which are absorbed into that
    endpoint (flat families underflow to zero displacement near the ends,
    which is numerically indistinguishable from an identity piece).
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    if tol <= 0:
        raise ValueError("tol must be positive")
    xs = np.linspace(0.0, 1.0, grid_size + 1)
    vals = np.asarray(spec.phi(xs), dtype=float)

    zero = vals == 0.0
    if bool(np.all(zero)):
        return FixedPointScan(points=(0.0, 1.0), fixed_intervals=((0.0, 1.0),),
                              grid_size=grid_size)

    detections: list[float] = [0.0]
    intervals: list[tuple[float, float]] = []

    # exact-zero runs over interior probes
    i = 1
    while i < grid_size:
        if zero[i]:
            j = i
            while j < grid_size and zero[j]:
                j += 1
            touches_left = i == 1
            touches_right = j == grid_size
            if touches_left or touches_right:
                pass  # absorbed into the neighbouring endpoint
            elif j - i >= 2:
                intervals.append((float(xs[i]), float(xs[j - 1])))
            else:
                detections.append(float(xs[i]))
            i = j
        else:
            i += 1

    # sign changes between consecutive nonzero probes
    for i in range(1, grid_size):
        a, b = vals[i], vals[i + 1]
        if a == 0.0 or b == 0.0:
            continue
        if (a > 0) != (b > 0):
            root = bisect_sign_change(lambda t: float(spec.phi(t)),
                                      float(xs[i]), float(xs[i + 1]), abs_tol=tol)
            detections.append(float(root))

    detections.append(1.0)
    detections.sort()
    merged: list[float] = []
    merge_tol = 2.0 / grid_size
    for p in detections:
        if merged and p - merged[-1] < merge_tol:
            # keep endpoints pinned when they took part in a merge
            if merged[-1] == 0.0:
                continue
            if p == 1.0:
                merged[-1] = 1.0
            else:
                merged[-1] = 0.5 * (merged[-1] + p)
        else:
            merged.append(p)
    return FixedPointScan(points=tuple(merged), fixed_intervals=tuple(intervals),
                          grid_size=grid_size)


def classify_fixed_point(spec: DiffeoSpec, x_star: float,
                         max_order: int = MAX_PROBE_ORDER,
                         tol: float = DEFAULT_MULTIPLIER_TOL) -> Stratum:
    """Stratify a fixed point by multiplier, then by tangency order.

    Higher-order displacement derivatives are compared against sqrt(tol):
    Richardson differences lose about half the working digits per order.
    """
    if not 2 <= max_order <= MAX_PROBE_ORDER:
        raise ValueError(f"max_order must lie in [2, {MAX_PROBE_ORDER}]")
    if abs(float(spec.phi(x_star))) > max(tol, DEFAULT_LOCATION_TOL * 10):
        raise ValueError(f"x={x_star} is not a fixed point")
    multiplier = float(spec.df(x_star))
    if abs(multiplier - 1.0) > tol:
        return Hyperbolic(multiplier=multiplier)
    threshold = math.sqrt(tol)
    for order in range(2, max_order + 1):
        try:
            value = derivative(spec, x_star, order)
        except PrecisionError:
            break
        if abs(value) > threshold:
            return Parabolic(order=order, coefficient=value)
    return Flat(order=max_order)


def max_log_multiplier(spec: DiffeoSpec, points) -> float:
    """max over fixed points of |log f'|; zero iff all multipliers equal 1."""
    best = 0.0
    for p in points:
        d = float(spec.df(float(p)))
        if d <= 0.0:
            raise ValueError(f"nonpositive derivative at fixed point {p}")
        best = max(best, abs(math.log(d)))
    return best


def analyze(spec: DiffeoSpec, grid_size: int = 2048,
            location_tol: float = DEFAULT_LOCATION_TOL,
            multiplier_tol: float = DEFAULT_MULTIPLIER_TOL,
            max_order: int = MAX_PROBE_ORDER) -> FixedPointReport:
    """Full report: located points, strata, fixed intervals and the maximal
    |log multiplier| over the fixed-point set."""
    scan = find_fixed_points(spec, grid_size=grid_size, tol=location_tol)
    classified = tuple(
        FixedPoint(location=p,
                   stratum=classify_fixed_point(spec, p, max_order=max_order,
                                                tol=multiplier_tol))
        for p in scan.points
    )
    return FixedPointReport(
        points=classified,
        fixed_intervals=scan.fixed_intervals,
        max_abs_log_multiplier=max_log_multiplier(spec, scan.points),
        detection_grid=grid_size,
    )
