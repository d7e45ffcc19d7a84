"""Representation and basic calculus of endpoint-fixing interval maps.

A DiffeoSpec bundles the map, its displacement f(x) - x and their analytic
first derivatives as array-capable callables.  All higher-order information
is optional; when a family cannot supply it, Richardson-extrapolated finite
differences are used as a cross-check path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, InvalidSpecError, PrecisionError
from .numerics import default_fd_step, fd_derivative

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class DiffeoSpec:
    """An orientation-preserving map of [0,1] fixing both endpoints.

    `f`, `df`, `phi`, `dphi` accept floats or numpy arrays.  `phi` is the
    displacement f(x) - x supplied in closed form so that parabolic and flat
    families keep full precision near their fixed points.
    """

    kind: str
    f: Callable
    df: Callable
    phi: Callable
    dphi: Callable
    params: Mapping[str, float] = field(default_factory=dict)
    domain: tuple[float, float] = (0.0, 1.0)
    suggested_seeds: tuple[float, ...] = ()
    log_df: Callable | None = None        # log f'(x); defaults to log(df(x))
    step: Callable | None = None          # fused x -> (f(x), log f'(x))
    iterate_n: Callable | None = None     # closed-form n-th iterate (x, n)
    log_deriv_n: Callable | None = None   # closed-form log (f^n)'(x)
    deriv_k: Callable | None = None       # (x, order) -> f^(order)(x) or None
    meta: Mapping[str, object] = field(default_factory=dict)

    def log_derivative(self, x):
        if self.log_df is not None:
            return self.log_df(x)
        return np.log(self.df(x))

    def advance(self, x):
        """One orbit step: returns (f(x), log f'(x))."""
        if self.step is not None:
            return self.step(x)
        return self.f(x), self.log_derivative(x)


@dataclass(frozen=True)
class Displacement:
    """The displacement x -> f(x) - x of an underlying spec."""

    underlying: DiffeoSpec

    def __call__(self, x):
        return self.underlying.phi(x)

    def derivative(self, x):
        return self.underlying.dphi(x)


@dataclass(frozen=True)
class ValidationReport:
    monotone_ok: bool
    endpoints_ok: bool
    min_derivative: float
    max_derivative: float
    probe_count: int

    @property
    def ok(self) -> bool:
        return self.monotone_ok and self.endpoints_ok


def _check_domain(spec: DiffeoSpec, x: float) -> None:
    lo, hi = spec.domain
    if not (lo <= x <= hi):
        raise DomainError(f"x={x!r} outside domain [{lo}, {hi}]")


def evaluate(spec: DiffeoSpec, x: float) -> float:
    """f(x); exact at the fixed endpoints."""
    _check_domain(spec, x)
    lo, hi = spec.domain
    if x == lo:
        return lo
    if x == hi:
        return hi
    return float(spec.f(x))


def derivative(spec: DiffeoSpec, x: float, order: int = 1) -> float:
    """f^(order)(x).  Order 1 always uses the family's analytic derivative.

    Orders >= 2 use a family-provided formula when present, otherwise
    Richardson-extrapolated differences of the displacement (for m >= 2 the
    m-th derivatives of f and of the displacement coincide).
    """
    _check_domain(spec, x)
    if order < 1:
        raise ValueError("order must be a positive integer")
    if order == 1:
        return float(spec.df(x))
    if spec.deriv_k is not None:
        exact = spec.deriv_k(x, order)
        if exact is not None:
            return float(exact)
    if order > 8:
        raise PrecisionError(
            "no closed form available and finite differences beyond order 8 "
            "are unreliable in double precision")
    lo, hi = spec.domain
    h0 = default_fd_step(x, lo, hi)
    return fd_derivative(lambda t: float(spec.phi(t)), x, order, h0, lo, hi)


def inverse_evaluate(spec: DiffeoSpec, y: float, tol: float = 1e-12) -> float:
    """Solve f(x) = y by bisection; requires a monotone spec."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_domain(spec, y)
    lo, hi = spec.domain
    if y == lo:
        return lo
    if y == hi:
        return hi
    probes = np.linspace(lo, hi, 17)
    values = np.asarray(spec.f(probes), dtype=float)
    if np.any(np.diff(values) <= 0.0):
        raise InvalidSpecError("spec is not strictly increasing; cannot invert")
    a, b = lo, hi
    mid = 0.5 * (a + b)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = float(spec.f(mid))
        if abs(fm - y) <= tol:
            return mid
        if fm < y:
            a = mid
        else:
            b = mid
    raise PrecisionError("bisection did not meet tolerance within 200 halvings")


def inverse_evaluate_many(spec: DiffeoSpec, ys: Array, iterations: int = 100) -> Array:
    """Vectorized bisection for batch inversion (fixed iteration count)."""
    ys = np.asarray(ys, dtype=float)
    lo, hi = spec.domain
    a = np.full_like(ys, lo)
    b = np.full_like(ys, hi)
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        fm = spec.f(mid)
        go_right = fm < ys
        a = np.where(go_right, mid, a)
        b = np.where(go_right, b, mid)
    out = 0.5 * (a + b)
    out[ys == lo] = lo
    out[ys == hi] = hi
    return out


def validate(spec: DiffeoSpec, probe_count: int = 1000) -> ValidationReport:
    """Probe endpoint fixing, strict monotonicity and derivative positivity."""
    if probe_count < 2:
        raise ValueError("probe_count must be at least 2")
    lo, hi = spec.domain
    xs = np.linspace(lo, hi, probe_count)
    values = np.asarray(spec.f(xs), dtype=float)
    derivs = np.asarray(spec.df(xs), dtype=float)
    endpoints_ok = (abs(float(values[0]) - lo) <= 1e-12
                    and abs(float(values[-1]) - hi) <= 1e-12)
    increasing = bool(np.all(np.diff(values) > 0.0))
    min_d = float(np.min(derivs))
    max_d = float(np.max(derivs))
    monotone_ok = increasing and min_d > 0.0
    return ValidationReport(
        monotone_ok=monotone_ok,
        endpoints_ok=endpoints_ok,
        min_derivative=min_d,
        max_derivative=max_d,
        probe_count=probe_count,
    )
