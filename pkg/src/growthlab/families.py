"""Constructors for the shipped interval-map families.

Every constructor returns a DiffeoSpec with closed-form displacement and
first derivative.  Families with extra structure also provide closed-form
iterates (conjugated translation), exact higher derivatives (polynomials),
or fused orbit steps for the iteration kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .diffeo import DiffeoSpec
from .errors import ConstructionError, DomainError, InvalidParameterError, PrecisionError
from .numerics import (
    bisect_sign_change,
    smooth_fall,
    smooth_fall_deriv,
    smooth_rise,
    smooth_rise_deriv,
)

TWO_PI = 2.0 * math.pi

# geometric ladder used throughout for seeds accumulating at the endpoints
GEOMETRIC_SEEDS = tuple(2.0 ** -j for j in range(1, 41))


def _maybe_scalar(out, x):
    return out if np.ndim(x) else float(out)


# ---------------------------------------------------------------------------
# identity and custom closures
# ---------------------------------------------------------------------------

def from_callables(*, phi=None, dphi=None, f=None, df=None, kind="custom-closure",
                   params=None, suggested_seeds=(), log_df=None, step=None,
                   iterate_n=None, log_deriv_n=None, deriv_k=None, meta=None) -> DiffeoSpec:
    """Assemble a spec from user closures; missing pieces are derived.

    Callables must accept floats and numpy arrays alike.
    """
    if phi is None and f is None:
        raise ValueError("need at least one of phi / f")
    if phi is None:
        phi = lambda x: f(x) - np.asarray(x, dtype=float)
    if f is None:
        f = lambda x: np.asarray(x, dtype=float) + phi(x)
    if dphi is None and df is None:
        raise ValueError("need at least one of dphi / df")
    if dphi is None:
        dphi = lambda x: df(x) - 1.0
    if df is None:
        df = lambda x: 1.0 + dphi(x)
    return DiffeoSpec(
        kind=kind, f=f, df=df, phi=phi, dphi=dphi,
        params=dict(params or {}), suggested_seeds=tuple(suggested_seeds),
        log_df=log_df, step=step, iterate_n=iterate_n,
        log_deriv_n=log_deriv_n, deriv_k=deriv_k, meta=dict(meta or {}),
    )


def identity() -> DiffeoSpec:
    """The identity map (every point fixed)."""
    def f(x):
        return np.asarray(x, dtype=float) + 0.0

    def one(x):
        return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0

    def zero(x):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    return DiffeoSpec(
        kind="identity", f=lambda x: _maybe_scalar(f(x), x),
        df=one, phi=zero, dphi=zero, log_df=zero,
        iterate_n=lambda x, n: _maybe_scalar(f(x), x),
        log_deriv_n=lambda x, n: zero(x),
        deriv_k=lambda x, order: 0.0,
    )


# ---------------------------------------------------------------------------
# hyperbolic: f(x) = x + c x (1 - x)
# ---------------------------------------------------------------------------

def hyperbolic(c: float) -> DiffeoSpec:
    """Endpoint multipliers 1+c and 1-c; exponential derivative growth."""
    if not abs(c) < 1.0:
        raise InvalidParameterError(f"|c| must be < 1, got c={c}")

    def phi(x):
        x = np.asarray(x, dtype=float)
        return c * x * (1.0 - x)

    def dphi(x):
        x = np.asarray(x, dtype=float)
        return c * (1.0 - 2.0 * x)

    def f(x):
        xa = np.asarray(x, dtype=float)
        return _maybe_scalar(xa + c * xa * (1.0 - xa), x)

    def df(x):
        return _maybe_scalar(1.0 + dphi(x), x)

    def log_df(x):
        return _maybe_scalar(np.log1p(dphi(x)), x)

    def deriv_k(x, order):
        if order == 2:
            return -2.0 * c
        return 0.0 if order >= 3 else None

    def step(x):
        d = dphi(x)
        return np.asarray(x, dtype=float) + c * np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float)), np.log1p(d)

    return DiffeoSpec(
        kind="hyperbolic", f=f, df=df,
        phi=lambda x: _maybe_scalar(phi(x), x),
        dphi=lambda x: _maybe_scalar(dphi(x), x),
        params={"c": float(c)}, log_df=log_df, step=step, deriv_k=deriv_k,
    )


# ---------------------------------------------------------------------------
# polynomial-flat: f(x) = x + c (x(1-x))^k, tangency of order k at both ends
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def monotonicity_bound(k: int) -> float:
    """Largest c with f' > 0 everywhere: 1 / max |d/dx (x(1-x))^k|."""
    xs = np.linspace(0.0, 1.0, 200001)
    u = xs * (1.0 - xs)
    g = k * u ** (k - 1) * (1.0 - 2.0 * xs)
    i = int(np.argmax(np.abs(g)))
    # parabolic refinement around the discrete maximizer
    lo = max(i - 1, 0)
    hi = min(i + 1, xs.size - 1)
    fine = np.linspace(xs[lo], xs[hi], 20001)
    uf = fine * (1.0 - fine)
    gf = np.abs(k * uf ** (k - 1) * (1.0 - 2.0 * fine))
    return 1.0 / float(np.max(gf))


@lru_cache(maxsize=None)
def _poly_derivative_coeffs(k: int, order: int) -> tuple[float, ...]:
    # coefficients of the order-th derivative of (x - x^2)^k
    base = np.polynomial.Polynomial([0.0, 1.0, -1.0]) ** k
    return tuple(base.deriv(order).coef)


def polynomial_flat(k: int, c: float) -> DiffeoSpec:
    """Displacement c (x(1-x))^k: parabolic fixed points of order k at 0, 1."""
    if k < 2:
        raise InvalidParameterError("k must be an integer >= 2")
    if not 0.0 < c < monotonicity_bound(k):
        raise InvalidParameterError(
            f"c={c} outside (0, {monotonicity_bound(k):.6g}) for k={k}")

    def phi(x):
        x = np.asarray(x, dtype=float)
        return c * (x * (1.0 - x)) ** k

    def dphi(x):
        x = np.asarray(x, dtype=float)
        u = x * (1.0 - x)
        return c * k * u ** (k - 1) * (1.0 - 2.0 * x)

    def f(x):
        return _maybe_scalar(np.asarray(x, dtype=float) + phi(x), x)

    def df(x):
        return _maybe_scalar(1.0 + dphi(x), x)

    def log_df(x):
        return _maybe_scalar(np.log1p(dphi(x)), x)

    def deriv_k(x, order):
        if order > 2 * k:
            return 0.0
        coeffs = _poly_derivative_coeffs(k, order)
        return c * float(np.polynomial.polynomial.polyval(x, np.asarray(coeffs)))

    def step(x):
        xa = np.asarray(x, dtype=float)
        u = xa * (1.0 - xa)
        d = c * k * u ** (k - 1) * (1.0 - 2.0 * xa)
        return xa + c * u ** k, np.log1p(d)

    return DiffeoSpec(
        kind="polynomial-flat", f=f, df=df,
        phi=lambda x: _maybe_scalar(phi(x), x),
        dphi=lambda x: _maybe_scalar(dphi(x), x),
        params={"k": float(k), "c": float(c)},
        suggested_seeds=GEOMETRIC_SEEDS,
        log_df=log_df, step=step, deriv_k=deriv_k,
    )


# ---------------------------------------------------------------------------
# conjugated translation: f = psi^-1 (psi + c) with psi = (2x-1)/(x(1-x))
# ---------------------------------------------------------------------------

_X_FLOOR = 1e-150
_X_CEIL = float(np.nextafter(1.0, 0.0))


def _psi(x):
    x = np.clip(np.asarray(x, dtype=float), _X_FLOOR, _X_CEIL)
    return (2.0 * x - 1.0) / (x * (1.0 - x))


def _psi_inv(y):
    # branch on the sign of y so neither form cancels:
    #   y <= 0:  x = 2 / (sqrt(y^2+4) + 2 + |y|)
    #   y >  0:  x = 1 - 2 / (sqrt(y^2+4) + 2 + y)   (odd symmetry about 1/2)
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore"):
        denom = np.sqrt(y * y + 4.0) + 2.0 + np.abs(y)
    small = 2.0 / denom
    return np.where(y > 0.0, 1.0 - small, small)


def _product_from_coord(s):
    # u = x(1-x) at x = psi^-1(s); cancellation-free for all s
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore"):
        return 1.0 / (2.0 + np.sqrt(4.0 + s * s))


def _log_psi_prime_from_coord(s):
    # psi'(x) = (1 - 2u)/u^2 with u = x(1-x)
    u = _product_from_coord(s)
    return np.log1p(-2.0 * u) - 2.0 * np.log(u)


def _log_psi_prime(x):
    x = np.clip(np.asarray(x, dtype=float), _X_FLOOR, _X_CEIL)
    u = x * (1.0 - x)
    return np.log1p(-2.0 * u) - 2.0 * np.log(u)


def _psi_prime(x):
    x = np.clip(np.asarray(x, dtype=float), _X_FLOOR, _X_CEIL)
    return 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))


def conjugated_translation(c: float) -> DiffeoSpec:
    """Translation by c in the coordinate psi; closed-form n-th iterate.

    Second-order tangency at both endpoints (f(x) = x + c x^2 + O(x^3) near 0),
    so it realizes quadratic derivative growth with an exact oracle:
    (f^n)'(x) = psi'(x) / psi'(f^n(x)).
    """
    if not math.isfinite(c):
        raise InvalidParameterError("c must be finite")
    if c == 0.0:
        spec = identity()
        return DiffeoSpec(
            kind="conjugated-translation", f=spec.f, df=spec.df, phi=spec.phi,
            dphi=spec.dphi, params={"c": 0.0}, log_df=spec.log_df,
            iterate_n=spec.iterate_n, log_deriv_n=spec.log_deriv_n,
        )

    def _advance(x, shift):
        xa = np.asarray(x, dtype=float)
        interior = (xa > 0.0) & (xa < 1.0)
        out = _psi_inv(_psi(xa) + shift)
        return np.where(interior, out, xa)

    def f(x):
        return _maybe_scalar(_advance(x, c), x)

    def df(x):
        xa = np.asarray(x, dtype=float)
        interior = (xa > 0.0) & (xa < 1.0)
        s = _psi(xa)
        out = np.where(interior,
                       np.exp(_log_psi_prime_from_coord(s)
                              - _log_psi_prime_from_coord(s + c)),
                       1.0)
        return _maybe_scalar(out, x)

    def log_df(x):
        xa = np.asarray(x, dtype=float)
        interior = (xa > 0.0) & (xa < 1.0)
        s = _psi(xa)
        out = np.where(interior,
                       _log_psi_prime_from_coord(s) - _log_psi_prime_from_coord(s + c),
                       0.0)
        return _maybe_scalar(out, x)

    def step(x):
        # the distortion increment is evaluated in the translation coordinate,
        # which keeps full relative precision even when x is squeezed against
        # an endpoint in float representation
        xa = np.asarray(x, dtype=float)
        interior = (xa > 0.0) & (xa < 1.0)
        s = _psi(xa)
        s2 = s + c
        y = np.where(interior, _psi_inv(s2), xa)
        ld = np.where(interior,
                      _log_psi_prime_from_coord(s) - _log_psi_prime_from_coord(s2),
                      0.0)
        return y, ld

    def phi(x):
        xa = np.asarray(x, dtype=float)
        return _maybe_scalar(_advance(xa, c) - xa, x)

    def dphi(x):
        return _maybe_scalar(np.asarray(df(x), dtype=float) - 1.0, x)

    def iterate_n(x, n):
        return _maybe_scalar(_advance(x, n * c), x)

    def log_deriv_n(x, n):
        xa = np.asarray(x, dtype=float)
        interior = (xa > 0.0) & (xa < 1.0)
        s = _psi(xa)
        out = np.where(interior,
                       _log_psi_prime_from_coord(s) - _log_psi_prime_from_coord(s + n * c),
                       0.0)
        return _maybe_scalar(out, x)

    return DiffeoSpec(
        kind="conjugated-translation", f=f, df=df, phi=phi, dphi=dphi,
        params={"c": float(c)}, log_df=log_df, step=step,
        iterate_n=iterate_n, log_deriv_n=log_deriv_n,
    )


# ---------------------------------------------------------------------------
# flat-exp: f(x) = x + c exp(-1/(x(1-x))), displacement flat at both ends
# ---------------------------------------------------------------------------

def _flat_kernel(x):
    x = np.asarray(x, dtype=float)
    u = x * (1.0 - x)
    out = np.zeros_like(u)
    pos = u > 0.0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        out[pos] = np.exp(-1.0 / u[pos])
    return out


def _flat_kernel_deriv(x):
    x = np.asarray(x, dtype=float)
    u = x * (1.0 - x)
    out = np.zeros_like(u)
    pos = u > 0.0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        up = u[pos]
        out[pos] = np.exp(-1.0 / up) * (1.0 - 2.0 * x[pos]) / (up * up)
    return out


def flat_exp(c: float) -> DiffeoSpec:
    """Flat at both endpoints, displacement increasing then decreasing."""
    if c < 0.0:
        raise InvalidParameterError("c must be nonnegative")
    if c > 0.0:
        xs = np.linspace(0.0, 1.0, 8193)
        if np.min(1.0 + c * _flat_kernel_deriv(xs)) <= 0.0:
            raise InvalidParameterError(
                f"c={c} too large: derivative loses positivity")

    def phi(x):
        return c * _flat_kernel(x)

    def dphi(x):
        return c * _flat_kernel_deriv(x)

    def f(x):
        return _maybe_scalar(np.asarray(x, dtype=float) + phi(x), x)

    def df(x):
        return _maybe_scalar(1.0 + dphi(x), x)

    def log_df(x):
        return _maybe_scalar(np.log1p(dphi(x)), x)

    def step(x):
        xa = np.asarray(x, dtype=float)
        d = dphi(xa)
        return xa + c * _flat_kernel(xa), np.log1p(d)

    return DiffeoSpec(
        kind="flat-exp", f=f, df=df,
        phi=lambda x: _maybe_scalar(phi(x), x),
        dphi=lambda x: _maybe_scalar(dphi(x), x),
        params={"c": float(c)},
        suggested_seeds=tuple(np.linspace(0.05, 0.45, 9)) + GEOMETRIC_SEEDS[:20],
        log_df=log_df, step=step,
    )


# ---------------------------------------------------------------------------
# flat bump ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatBumpSchedule:
    """Layout of quadratic windows parked on the interval ladder 1/(2k)..1/(2k-1).

    For each active index k the displacement restricted to the plateau of the
    k-th bump is curvature*(x-window_start)^2 + floor; `horizons[k]` is the
    iteration count from which that bump is supposed to carry the growth.
    """

    count: int
    curvatures: tuple[float, ...]
    floors: tuple[float, ...]
    window_starts: tuple[float, ...]
    window_widths: tuple[float, ...]
    plateaus: tuple[tuple[float, float], ...]
    supports: tuple[tuple[float, float], ...]
    horizons: tuple[int, ...]
    eps: Callable[[float], float] = field(repr=False, default=lambda n: 1.0 / math.log(n + 2.0))

    def eps_condition(self) -> tuple[bool, ...]:
        """curvature*width >= eps(horizon) per bump (growth-floor condition)."""
        return tuple(
            self.curvatures[i] * self.window_widths[i] >= self.eps(self.horizons[i])
            for i in range(self.count)
        )

    def validate(self) -> None:
        n = self.count
        for name in ("curvatures", "floors", "window_starts", "window_widths",
                     "plateaus", "supports", "horizons"):
            if len(getattr(self, name)) != n:
                raise InvalidParameterError(f"{name} must have length {n}")
        prev_gamma = math.inf
        for i in range(n):
            a, b = self.supports[i]
            c, d = self.plateaus[i]
            z = self.window_starts[i]
            w = self.window_widths[i]
            g = self.curvatures[i]
            if not (0.0 < a < c < d < b <= 1.0):
                raise InvalidParameterError(f"bump {i}: plateau not inside support")
            if not (c < z < z + w < d):
                raise InvalidParameterError(f"bump {i}: window not inside plateau")
            if not (0.0 < g < 1.0 / 100.0):
                raise InvalidParameterError(f"bump {i}: curvature must be in (0, 1/100)")
            if g >= prev_gamma:
                raise InvalidParameterError("curvatures must be strictly decreasing")
            prev_gamma = g
            if not (0.0 < self.floors[i] <= g):
                raise InvalidParameterError(f"bump {i}: floor must be in (0, curvature]")
            if self.horizons[i] < 3.0 / (g * w):
                raise InvalidParameterError(
                    f"bump {i}: horizon {self.horizons[i]} below 3/(curvature*width)")
        for i in range(n - 1):
            if self.supports[i + 1][1] > self.supports[i][0]:
                raise InvalidParameterError("supports must be pairwise disjoint")


def default_flat_bump_schedule(count: int = 4,
                               eps: Callable[[float], float] | None = None) -> FlatBumpSchedule:
    """K bumps on (1/(2k), 1/(2k-1)) with geometrically decaying curvature."""
    if eps is None:
        eps = lambda n: 1.0 / math.log(n + 2.0)
    curv, floors, starts, widths, plateaus, supports, horizons = [], [], [], [], [], [], []
    for k in range(1, count + 1):
        lo = 1.0 / (2.0 * k)
        hi = 1.0 / (2.0 * k - 1.0)
        length = hi - lo
        mid = 0.5 * (lo + hi)
        w = length / 4.0
        z = mid - w / 2.0
        g = 1e-2 * 2.0 ** (-k)
        supports.append((lo, hi))
        plateaus.append((mid - length / 4.0, mid + length / 4.0))
        starts.append(z)
        widths.append(w)
        curv.append(g)
        floors.append(g * 1e-6)
        horizons.append(int(math.ceil(3.0 / (g * w))))
    sched = FlatBumpSchedule(
        count=count, curvatures=tuple(curv), floors=tuple(floors),
        window_starts=tuple(starts), window_widths=tuple(widths),
        plateaus=tuple(plateaus), supports=tuple(supports),
        horizons=tuple(horizons), eps=eps,
    )
    if count:
        sched.validate()
    return sched


_FILL_COEFF = 1e-4


def flat_bump(schedule: FlatBumpSchedule, require_eps_condition: bool = False) -> DiffeoSpec:
    """Sum of parked quadratic bumps plus a strictly positive flat filler.

    The displacement equals curvature*(x-z)^2 + floor on each plateau, decays
    flat within each support, and off the supports equals the filler
    1e-4*exp(-1/(x(1-x))) masked away from the quadratic windows.  With
    require_eps_condition=True the growth-floor condition
    curvature*width >= eps(horizon) is enforced as a hard error.
    """
    schedule.validate()
    if require_eps_condition and not all(schedule.eps_condition()):
        raise InvalidParameterError("curvature*width < eps(horizon) for some bump")

    # region table: one binary search classifies every point, plain gathers
    # supply the quadratic coefficients, and only the (rare) points inside a
    # smooth transition zone take the kernel-evaluation patch path
    breaks: list[float] = []
    regions: list[dict] = [{"quad": 0.0, "z": 0.0, "floor": 0.0, "fill": 1.0,
                            "trans": None}]
    for i in range(schedule.count - 1, -1, -1):  # supports ascend with k desc
        a, b = schedule.supports[i]
        c, d = schedule.plateaus[i]
        z = schedule.window_starts[i]
        w = schedule.window_widths[i]
        lm = z - c
        rm = d - (z + w)
        va, vb = z - 0.9 * lm, z + w + 0.9 * rm
        g, om = schedule.curvatures[i], schedule.floors[i]
        quad = {"quad": g, "z": z, "floor": om}
        for left_edge, kind, fill_on in (
                (a, ("u-rise", a, c), 1.0),
                (c, None, 1.0),
                (va, ("v-rise", va, z), 1.0),
                (z, None, 0.0),
                (z + w, ("v-fall", z + w, vb), 1.0),
                (vb, None, 1.0),
                (d, ("u-fall", d, b), 1.0)):
            breaks.append(left_edge)
            regions.append({**quad, "fill": fill_on, "trans": kind})
        breaks.append(b)
        regions.append({"quad": 0.0, "z": 0.0, "floor": 0.0, "fill": 1.0,
                        "trans": None})
    breaks_arr = np.asarray(breaks)
    r_quad = np.array([r["quad"] for r in regions])
    r_z = np.array([r["z"] for r in regions])
    r_floor = np.array([r["floor"] for r in regions])
    r_fill = np.array([r["fill"] for r in regions])
    r_trans = np.array([r["trans"] is not None for r in regions])
    # transition parameters: rise(s) with s measured from the zero-valued edge,
    # so falls become rises of 1-s; u-type zones scale the quadratic, v-type
    # zones mask the filler
    r_lo = np.zeros(len(regions))
    r_ispan = np.ones(len(regions))   # signed 1/span; negative for falls
    r_isu = np.zeros(len(regions), dtype=bool)
    for j, r in enumerate(regions):
        if r["trans"] is None:
            continue
        kind, lo, hi = r["trans"]
        if kind.endswith("rise"):
            r_lo[j] = lo
            r_ispan[j] = 1.0 / (hi - lo)
        else:
            r_lo[j] = hi
            r_ispan[j] = -1.0 / (hi - lo)
        r_isu[j] = kind.startswith("u")

    def _phi_dphi(flat):
        u = flat * (1.0 - flat)
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            e = np.exp(-1.0 / np.where(u > 0.0, u, 1.0))
        e = np.where(u > 0.0, e, 0.0)
        fill = _FILL_COEFF * e
        with np.errstate(divide="ignore", invalid="ignore"):
            dfill = np.where(u > 0.0, fill * (1.0 - 2.0 * flat) / (u * u), 0.0)
        rid = np.searchsorted(breaks_arr, flat)
        gq = r_quad[rid]
        gz = flat - r_z[rid]
        phi_out = gq * gz * gz + r_floor[rid] + r_fill[rid] * fill
        dphi_out = 2.0 * gq * gz + r_fill[rid] * dfill
        trans = r_trans[rid]
        if np.any(trans):
            sub = np.nonzero(trans)[0]
            rs = rid[sub]
            xs = flat[sub]
            ispan = r_ispan[rs]
            s = (xs - r_lo[rs]) * ispan
            rise = smooth_rise(s)
            drise = smooth_rise_deriv(s) * ispan
            quad = r_quad[rs] * (xs - r_z[rs]) ** 2 + r_floor[rs]
            dquad = 2.0 * r_quad[rs] * (xs - r_z[rs])
            isu = r_isu[rs]
            fs = fill[sub]
            dfs = dfill[sub]
            phi_out[sub] = np.where(
                isu, quad * rise + fs, quad + fs * (1.0 - rise))
            dphi_out[sub] = np.where(
                isu, dquad * rise + quad * drise + dfs,
                dquad + dfs * (1.0 - rise) - fs * drise)
        return phi_out, dphi_out

    def phi(x):
        xa = np.asarray(x, dtype=float)
        out, _ = _phi_dphi(xa.reshape(-1))
        return _maybe_scalar(out.reshape(xa.shape), x)

    def dphi(x):
        xa = np.asarray(x, dtype=float)
        _, out = _phi_dphi(xa.reshape(-1))
        return _maybe_scalar(out.reshape(xa.shape), x)

    def f(x):
        return _maybe_scalar(np.asarray(x, dtype=float) + phi(x), x)

    def df(x):
        return _maybe_scalar(1.0 + np.asarray(dphi(x), dtype=float), x)

    def log_df(x):
        return _maybe_scalar(np.log1p(np.asarray(dphi(x), dtype=float)), x)

    def step(x):
        xa = np.asarray(x, dtype=float)
        p, d = _phi_dphi(xa)
        return xa + p, np.log1p(d)

    seeds = []
    for i in range(schedule.count):
        w = schedule.window_widths[i]
        z = schedule.window_starts[i]
        for j in range(20):
            seeds.append(z + (w / 3.0) * 2.0 ** (-j))

    params = {"count": float(schedule.count)}
    return DiffeoSpec(
        kind="flat-bump", f=f, df=df, phi=phi, dphi=dphi,
        params=params, suggested_seeds=tuple(seeds),
        log_df=log_df, step=step,
        meta={"schedule": schedule, "eps_condition": schedule.eps_condition()},
    )


# ---------------------------------------------------------------------------
# Hoelder oscillatory profile and the assembled C^{1,alpha} family
# ---------------------------------------------------------------------------

def _check_hoelder_params(alpha: float, beta: float) -> None:
    # the profile itself is defined for any positive exponents; the stricter
    # beta + 1 < 1/alpha requirement belongs to the assembled family, where
    # it controls the Lipschitz class of the derivative
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError("alpha must lie in (0,1)")
    if beta <= 0.0:
        raise InvalidParameterError("beta must be positive")


def hoelder_profile(alpha: float, beta: float, x) -> float:
    """Displacement profile whose exact orbit steps the lattice j^(-beta).

    At x = j^(-beta) (integer j >= 2) the value is exactly
    (j-1)^(-beta) - j^(-beta): the sine term vanishes on the lattice.
    """
    _check_hoelder_params(alpha, beta)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0.0) or np.any(xa >= 1.0):
        raise DomainError("profile is defined on the open interval (0,1)")
    inv = np.power(xa, -1.0 / beta)
    p = (alpha + 1.0) * (beta + 1.0) / beta
    out = np.power(inv - 1.0, -beta) - xa - np.power(xa, p) * np.sin(TWO_PI * inv)
    return _maybe_scalar(out, x)


def hoelder_profile_deriv(alpha: float, beta: float, x) -> float:
    _check_hoelder_params(alpha, beta)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0.0) or np.any(xa >= 1.0):
        raise DomainError("profile is defined on the open interval (0,1)")
    inv = np.power(xa, -1.0 / beta)          # x^(-1/beta)
    root = np.power(xa, 1.0 / beta)          # x^(1/beta)
    p = (alpha + 1.0) * (beta + 1.0) / beta
    q = alpha * (beta + 1.0) / beta
    angle = TWO_PI * inv
    out = (np.power(1.0 - root, -beta - 1.0) - 1.0
           - (alpha + 1.0) * ((beta + 1.0) / beta) * np.power(xa, p - 1.0) * np.sin(angle)
           + (TWO_PI / beta) * np.power(xa, q) * np.cos(angle))
    return _maybe_scalar(out, x)


def hoelder_raw_map(alpha: float, beta: float) -> DiffeoSpec:
    """x -> x + profile(x) on (0,1); not endpoint-fixing at 1 (germ model)."""
    _check_hoelder_params(alpha, beta)

    def f(x):
        xa = np.asarray(x, dtype=float)
        inside = (xa > 0.0) & (xa < 1.0)
        safe = np.where(inside, xa, 0.5)
        out = np.where(inside, safe + hoelder_profile(alpha, beta, safe), xa)
        return _maybe_scalar(out, x)

    def df(x):
        xa = np.asarray(x, dtype=float)
        inside = (xa > 0.0) & (xa < 1.0)
        safe = np.where(inside, xa, 0.5)
        out = np.where(inside, 1.0 + hoelder_profile_deriv(alpha, beta, safe), 1.0)
        return _maybe_scalar(out, x)

    return from_callables(
        f=f, df=df, kind="custom-closure",
        params={"alpha": float(alpha), "beta": float(beta)},
    )


@lru_cache(maxsize=None)
def profile_lip_bound(alpha: float, beta: float, grid: int = 8192) -> float:
    """Empirical Lip_alpha seminorm of the profile derivative on (0, 1/2].

    Dyadic-scale pair reduction; the oscillation makes the true seminorm
    scale-independent, so the estimate stabilizes quickly with grid size.
    """
    xs = np.linspace(0.0, 0.5, grid + 1)[1:]
    vals = np.asarray(hoelder_profile_deriv(alpha, beta, xs), dtype=float)
    h = xs[1] - xs[0]
    best = 0.0
    lag = 1
    while lag < xs.size:
        for ell in (lag, (3 * lag) // 2):
            if 0 < ell < xs.size:
                diff = np.abs(vals[ell:] - vals[:-ell])
                best = max(best, float(np.max(diff)) / (ell * h) ** alpha)
        lag *= 2
    return best


@dataclass(frozen=True)
class HoelderSchedule:
    """Per-interval oscillatory displacements with derivative in Lip_alpha."""

    alpha: float
    betas: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    lip_bounds: tuple[float, ...] | None = None

    def validate(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError("alpha must lie in (0,1)")
        if len(self.betas) != len(self.intervals):
            raise InvalidParameterError("betas and intervals must align")
        prev = math.inf
        for b in self.betas:
            if not 0.0 < b < 1.0 / self.alpha - 1.0:
                raise InvalidParameterError(
                    f"beta={b} outside (0, 1/alpha - 1) for alpha={self.alpha}")
            if b >= prev:
                raise InvalidParameterError("betas must be strictly decreasing")
            prev = b
        spans = sorted(self.intervals)
        for i, (a, b) in enumerate(spans):
            if not 0.0 <= a < b <= 1.0:
                raise InvalidParameterError("intervals must be ordered inside [0,1]")
            if i and a < spans[i - 1][1]:
                raise InvalidParameterError("intervals must be disjoint")


def default_hoelder_schedule(alpha: float = 0.5, beta: float = 0.5) -> HoelderSchedule:
    return HoelderSchedule(alpha=alpha, betas=(beta,), intervals=((0.0, 1.0),))


# Lip_alpha seminorm of the smooth-fall profile derivative, used when sizing
# the cutoff; a cached numerical estimate at the alpha actually requested.
@lru_cache(maxsize=None)
def _fall_lip_bound(alpha: float, grid: int = 4096) -> float:
    xs = np.linspace(0.0, 1.0, grid + 1)
    vals = smooth_fall_deriv(xs)
    h = xs[1] - xs[0]
    best = 0.0
    lag = 1
    while lag < xs.size:
        diff = np.abs(vals[lag:] - vals[:-lag])
        best = max(best, float(np.max(diff)) / (lag * h) ** alpha)
        lag *= 2
    return best


def _find_cutoff(alpha: float, beta: float, delta_cap: float, lip_bound: float) -> float:
    """Largest zero of the profile derivative below delta_cap that also keeps
    the cutoff's seminorm contribution within the rescaling budget."""
    j = max(2, int(math.ceil(delta_cap ** (-1.0 / beta))))
    # seminorm budget: profile(delta) * fall_norm * (2/(2*delta_cap))^(1+alpha) <= lip_bound
    budget = lip_bound * (2.0 * delta_cap) ** (1.0 + alpha) / (2.0 ** (1.0 + alpha) * _fall_lip_bound(alpha))
    for _ in range(200):
        hi = (j + 0.0) ** (-beta)
        lo = (j + 0.5) ** (-beta)
        if hi < delta_cap:
            f_hi = hoelder_profile_deriv(alpha, beta, hi)
            f_lo = hoelder_profile_deriv(alpha, beta, lo)
            if f_lo < 0.0 < f_hi:
                delta = bisect_sign_change(
                    lambda t: float(hoelder_profile_deriv(alpha, beta, t)),
                    lo, hi, abs_tol=1e-14)
                if float(hoelder_profile(alpha, beta, delta)) <= budget:
                    return delta
        j = max(j + 1, int(j * 1.3))
    raise ConstructionError(
        f"no derivative zero below {delta_cap:.3g} satisfied the cutoff budget")


def hoelder_family(schedule: HoelderSchedule) -> DiffeoSpec:
    """Assembled map: oscillatory profile, plateau and smooth cutoff per
    interval, rescaled so the derivative stays in Lip_alpha; identity off
    the intervals."""
    schedule.validate()
    alpha = schedule.alpha
    pieces = []
    seeds = []
    per_interval_meta = []
    for idx, ((a, b), beta) in enumerate(zip(schedule.intervals, schedule.betas)):
        length = b - a
        K = (schedule.lip_bounds[idx] if schedule.lip_bounds is not None
             else profile_lip_bound(alpha, beta))
        Delta = length * K ** (-1.0 / alpha)
        delta = _find_cutoff(alpha, beta, Delta / 2.0, K)
        scale = length / Delta  # = K^(1/alpha)
        j0 = int(math.ceil(delta ** (-1.0 / beta)))
        pieces.append((a, b, beta, Delta, delta, scale))
        per_interval_meta.append(
            {"interval": (a, b), "beta": beta, "lip_bound": K,
             "span": Delta, "cutoff": delta, "lattice_origin": j0})
        for n_extra in (100, 1000, 10000, 100000):
            t = (j0 + n_extra) ** (-beta)
            s = a + scale * t
            if a < s < b:
                seeds.append(s)
        for N in (100, 1000, 10000):
            s = a + N ** (-beta)
            if a < s < b:
                seeds.append(s)

    def _phi_piece(t, beta, Delta, delta):
        # displacement in unscaled coordinates t in (0, Delta]
        out = np.zeros_like(t)
        cap = float(hoelder_profile(alpha, beta, delta))
        low = (t > 0.0) & (t <= delta)
        midr = (t > delta) & (t <= Delta / 2.0)
        high = (t > Delta / 2.0) & (t < Delta)
        if np.any(low):
            out[low] = hoelder_profile(alpha, beta, t[low])
        out[midr] = cap
        if np.any(high):
            out[high] = cap * smooth_fall((2.0 * t[high] - Delta) / Delta)
        return out

    def _dphi_piece(t, beta, Delta, delta):
        out = np.zeros_like(t)
        cap = float(hoelder_profile(alpha, beta, delta))
        low = (t > 0.0) & (t <= delta)
        high = (t > Delta / 2.0) & (t < Delta)
        if np.any(low):
            out[low] = hoelder_profile_deriv(alpha, beta, t[low])
        if np.any(high):
            out[high] = cap * smooth_fall_deriv((2.0 * t[high] - Delta) / Delta) * 2.0 / Delta
        return out

    def phi(x):
        xa = np.asarray(x, dtype=float)
        flat = xa.reshape(-1)
        out = np.zeros_like(flat)
        for (a, b, beta, Delta, delta, scale) in pieces:
            sel = (flat > a) & (flat < b)
            if not np.any(sel):
                continue
            t = (flat[sel] - a) / scale
            out[sel] = scale * _phi_piece(t, beta, Delta, delta)
        return _maybe_scalar(out.reshape(xa.shape), x)

    def dphi(x):
        xa = np.asarray(x, dtype=float)
        flat = xa.reshape(-1)
        out = np.zeros_like(flat)
        for (a, b, beta, Delta, delta, scale) in pieces:
            sel = (flat > a) & (flat < b)
            if not np.any(sel):
                continue
            t = (flat[sel] - a) / scale
            out[sel] = _dphi_piece(t, beta, Delta, delta)
        return _maybe_scalar(out.reshape(xa.shape), x)

    def f(x):
        return _maybe_scalar(np.asarray(x, dtype=float) + np.asarray(phi(x), dtype=float), x)

    def df(x):
        return _maybe_scalar(1.0 + np.asarray(dphi(x), dtype=float), x)

    def log_df(x):
        return _maybe_scalar(np.log1p(np.asarray(dphi(x), dtype=float)), x)

    def step(x):
        xa = np.asarray(x, dtype=float)
        d = np.asarray(dphi(xa), dtype=float)
        return xa + np.asarray(phi(xa), dtype=float), np.log1p(d)

    return DiffeoSpec(
        kind="hoelder", f=f, df=df, phi=phi, dphi=dphi,
        params={"alpha": float(alpha), "k": float(len(pieces))},
        suggested_seeds=tuple(sorted(set(seeds))),
        log_df=log_df, step=step,
        meta={"schedule": schedule, "pieces": tuple(per_interval_meta)},
    )


# ---------------------------------------------------------------------------
# flows of a displacement field
# ---------------------------------------------------------------------------

def _rk4_step(phi, y, h):
    k1 = phi(y)
    k2 = phi(y + 0.5 * h * k1)
    k3 = phi(y + 0.5 * h * k2)
    k4 = phi(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate_flow(phi, x, t, tol):
    """Classical RK4 with step doubling; local error per unit time <= tol."""
    y = np.array(np.asarray(x, dtype=float), copy=True)
    if t == 0.0 or y.size == 0:
        return y
    elapsed = 0.0
    h = t / 8.0
    while elapsed < t:
        h = min(h, t - elapsed)
        if h < 1e-12:
            raise PrecisionError("flow integrator hit the 1e-12 step floor")
        full = _rk4_step(phi, y, h)
        half = _rk4_step(phi, _rk4_step(phi, y, 0.5 * h), 0.5 * h)
        err = float(np.max(np.abs(half - full))) / 15.0
        if err <= tol * h or h <= 1e-12:
            y = np.clip(half, 0.0, 1.0)
            elapsed += h
            grow = 4.0 if err == 0.0 else min(4.0, max(0.2, 0.9 * (tol * h / err) ** 0.25))
            h *= grow
        else:
            h *= max(0.2, 0.9 * (tol * h / err) ** 0.25)
    return y


def flow_map(base: DiffeoSpec, t: float, step_tol: float = 1e-10) -> DiffeoSpec:
    """Time-t map of dx/ds = displacement(x); derivative via the variational
    identity displacement(F(t,x))/displacement(x)."""
    if t < 0.0:
        raise InvalidParameterError("t must be nonnegative")
    if step_tol <= 0.0:
        raise InvalidParameterError("step_tol must be positive")
    probes = np.linspace(0.0, 1.0, 1025)
    vals = np.asarray(base.phi(probes), dtype=float)
    if np.any(vals < 0.0):
        raise InvalidParameterError("base displacement must be nonnegative")
    central = (probes >= 1.0 / 64.0) & (probes <= 63.0 / 64.0)
    if np.any(vals[central] <= 0.0):
        raise InvalidParameterError(
            "base displacement must be positive away from the endpoints")

    base_phi = base.phi
    base_dphi = base.dphi

    def f(x):
        xa = np.asarray(x, dtype=float)
        out = _integrate_flow(base_phi, np.atleast_1d(xa), t, step_tol)
        out = out.reshape(np.shape(xa))
        return _maybe_scalar(out, x)

    def df(x):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        img = _integrate_flow(base_phi, xa, t, step_tol)
        src = np.asarray(base_phi(xa), dtype=float)
        dst = np.asarray(base_phi(img), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = dst / src
        # where the field vanishes (endpoints, underflow-flat collars) use the
        # variational limit exp(t * phi'(x))
        degenerate = ~(src > 0.0)
        if np.any(degenerate):
            ratio = np.where(degenerate,
                             np.exp(t * np.asarray(base_dphi(xa), dtype=float)),
                             ratio)
        ratio = ratio.reshape(np.shape(np.asarray(x)))
        return _maybe_scalar(ratio, x)

    def phi(x):
        xa = np.asarray(x, dtype=float)
        return _maybe_scalar(np.asarray(f(xa), dtype=float) - xa, x)

    def dphi(x):
        return _maybe_scalar(np.asarray(df(x), dtype=float) - 1.0, x)

    return DiffeoSpec(
        kind="flow", f=f, df=df, phi=phi, dphi=dphi,
        params={"t": float(t), "step_tol": float(step_tol)},
        suggested_seeds=base.suggested_seeds,
        meta={"base": base},
    )
