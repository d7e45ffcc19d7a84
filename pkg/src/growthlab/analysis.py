"""Exponent fitting and numerical checks of orbit-distortion estimates.

The checks measure shapes (brackets, boundedness of normalized ratios,
stability under grid refinement) rather than the existential constants the
underlying inequalities carry.  Every check reports a LemmaReport; failing a
precondition yields applicable=False instead of an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diffeo import DiffeoSpec, derivative
from .errors import PrecisionError
from .families import hoelder_profile_deriv
from .numerics import adaptive_simpson, fit_line
from .orbit import GrowthCurve, _phi_checkpoint_sums, iterate_orbit, phi_sum

TWO_PI = 2.0 * math.pi

FIT_MODES = ("power", "exp-rate", "loglog")


@dataclass(frozen=True)
class ExponentFit:
    mode: str
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


@dataclass(frozen=True)
class LemmaReport:
    check_id: str
    measured: float
    bound: float | tuple[float, float]
    passed: bool
    applicable: bool = True
    worst_location: float | None = None
    details: dict = field(default_factory=dict)


def fit_exponent(curve: GrowthCurve, mode: str, window: tuple[float, float]) -> ExponentFit:
    """OLS fit of the growth curve in the requested coordinates.

    power:    log Gamma_n  against log n
    exp-rate: log Gamma_n  against n
    loglog:   log log Gamma_n against log n (requires log Gamma_n > 0)
    """
    if mode not in FIT_MODES:
        raise ValueError(f"mode must be one of {FIT_MODES}")
    lo, hi = window
    ns = curve.ns()
    lg = curve.log_gammas()
    sel = (ns >= lo) & (ns <= hi)
    if int(sel.sum()) < 5:
        raise ValueError("need at least 5 checkpoints inside the fit window")
    ns, lg = ns[sel], lg[sel]
    if mode == "power":
        x, y = np.log(ns), lg
    elif mode == "exp-rate":
        x, y = ns, lg
    else:
        if np.any(lg <= 0.0):
            raise ValueError("loglog mode requires log Gamma_n > 0 on the window")
        x, y = np.log(ns), np.log(lg)
    slope, intercept, r2 = fit_line(x, y)
    return ExponentFit(mode=mode, slope=slope, intercept=intercept,
                       r_squared=r2, window=(float(lo), float(hi)),
                       n_points=int(ns.size))


# ---------------------------------------------------------------------------
# almost-convexity recurrence
# ---------------------------------------------------------------------------

def _tail_weight(n: int, rate: float, alpha: float) -> float:
    """Upper bound for sum_{k>n} exp(-rate * k^(1-alpha)) via the integral."""
    if rate <= 0.0:
        return math.inf
    power = 1.0 - alpha
    t_hi = (745.0 / rate) ** (1.0 / power)
    if t_hi <= n + 1:
        return 0.0
    return adaptive_simpson(lambda t: math.exp(-rate * t ** power),
                            float(n), float(t_hi), rel_tol=1e-6, max_depth=60)


def smallest_growth_constant(k0: float, k1: float, alpha: float,
                             n_range: int) -> float:
    """Smallest A such that A[(n+1)^(1-a) - n^(1-a)] dominates the convexity
    tail 2*k0*sum_{k>n} exp(-(A/2-k1) k^(1-a)) for n = 1..n_range."""
    def feasible(a_val: float) -> bool:
        rate = a_val / 2.0 - k1
        if rate <= 0.0:
            return False
        for n in range(1, n_range + 1):
            gap = a_val * ((n + 1.0) ** (1.0 - alpha) - n ** (1.0 - alpha))
            if gap < 2.0 * k0 * _tail_weight(n, rate, alpha):
                return False
        return True

    hi = max(4.0 * (k1 + 1.0), 4.0)
    for _ in range(60):
        if feasible(hi):
            break
        hi *= 2.0
    else:
        raise PrecisionError("no feasible growth constant found")
    lo = 2.0 * k1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def check_almost_convexity(values: Sequence[float], k0: float, k1: float,
                           alpha: float) -> LemmaReport:
    """Check 2a_n - a_{n-1} - a_{n+1} <= k0 exp(-a_n + k1 n^(1-alpha)).

    Also fits the smallest admissible sub-power constant A and reports
    whether a_n <= A n^(1-alpha) holds on the data range.
    """
    a = np.asarray(values, dtype=float)
    if a.size < 3:
        raise ValueError("need at least three sequence values")
    n = np.arange(1, a.size - 1, dtype=float)
    lhs = 2.0 * a[1:-1] - a[:-2] - a[2:]
    rhs = k0 * np.exp(-a[1:-1] + k1 * n ** (1.0 - alpha))
    slack = lhs - rhs
    worst = int(np.argmax(slack))
    holds = bool(np.all(slack <= 1e-12))
    details = {"max_violation": float(slack[worst])}
    if alpha < 1.0:
        try:
            a_const = smallest_growth_constant(k0, k1, alpha, min(int(n[-1]), 200))
            conclusion = bool(np.all(a[1:] <= a_const
                                     * np.arange(1, a.size) ** (1.0 - alpha) + 1e-9))
            details["growth_constant"] = a_const
            details["conclusion_holds"] = conclusion
        except PrecisionError:
            details["growth_constant"] = math.inf
            details["conclusion_holds"] = None
    else:
        # at alpha = 1 the tail comparison degenerates (constant terms);
        # only the recurrence itself is checked
        details["growth_constant"] = None
        details["conclusion_holds"] = None
    return LemmaReport(
        check_id="almost-convexity", measured=float(slack[worst]), bound=0.0,
        passed=holds, worst_location=float(n[worst]), details=details)


# ---------------------------------------------------------------------------
# Lip_alpha seminorm estimation
# ---------------------------------------------------------------------------

def hoelder_constant(spec_or_function, alpha: float, grid_size: int = 2048,
                     lo: float = 0.0, hi: float = 1.0) -> float:
    """Empirical Lip_alpha seminorm via dyadic-scale pair reduction.

    Specs are measured through their derivative (the C^{1,alpha} seminorm of
    the map); bare callables are measured directly.  The grid excludes the
    left edge so model functions with oscillations like sin(1/x) evaluate.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0,1]")
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    xs = np.linspace(lo, hi, grid_size + 1)[1:]
    if isinstance(spec_or_function, DiffeoSpec):
        vals = np.asarray(spec_or_function.df(xs), dtype=float)
    else:
        vals = np.asarray(spec_or_function(xs), dtype=float)
    h = xs[1] - xs[0]
    best = 0.0
    lag = 1
    while lag < xs.size:
        for ell in (lag, lag + lag // 2):
            if 0 < ell < xs.size:
                diff = np.abs(vals[ell:] - vals[:-ell])
                best = max(best, float(np.max(diff)) / (ell * h) ** alpha)
        lag *= 2
    return best


def seminorm_stability(fn: Callable, alpha: float, grid_size: int = 2048,
                       doublings: int = 2) -> LemmaReport:
    """Relative change of the seminorm estimate under grid doubling."""
    estimates = [hoelder_constant(fn, alpha, grid_size * 2 ** i)
                 for i in range(doublings + 1)]
    rel_changes = [abs(estimates[i + 1] - estimates[i]) / estimates[i]
                   for i in range(doublings)]
    worst = max(rel_changes)
    return LemmaReport(
        check_id="seminorm-stability", measured=float(worst), bound=0.2,
        passed=worst < 0.2,
        details={"estimates": estimates, "relative_changes": rel_changes})


# ---------------------------------------------------------------------------
# displacement-ratio residual (distortion sum vs displacement quotient)
# ---------------------------------------------------------------------------

def verify_displacement_ratio(spec: DiffeoSpec, interval: tuple[float, float],
                              x1: float, n: int,
                              ratio_bound: float = 10.0) -> LemmaReport:
    """|log(phi(x_n)/phi(x_1)) - Phi(n-1, x_1)| compared against the interval
    length: the residual per unit length stays bounded as n grows."""
    a, b = interval
    if not a < x1 < b:
        raise ValueError("x1 must lie inside the interval")
    probe = np.linspace(a, b, 2050)[1:-1]
    pv = np.asarray(spec.phi(probe), dtype=float)
    if np.any(pv <= 0.0):
        raise ValueError("displacement must be positive inside the interval")
    if n < 1:
        raise ValueError("need n >= 1")
    if n == 1:
        return LemmaReport(check_id="displacement-ratio", measured=0.0,
                           bound=ratio_bound, passed=True, worst_location=x1,
                           details={"residual": 0.0, "interval_length": b - a,
                                    "n": 1})
    orb = iterate_orbit(spec, x1, n - 1)
    xn = float(orb.points[-1])
    phi1 = float(spec.phi(x1))
    phin = float(spec.phi(xn))
    if phin <= 0.0 or xn >= b:
        return LemmaReport(check_id="displacement-ratio", measured=math.inf,
                           bound=ratio_bound, passed=False, applicable=False,
                           details={"reason": "orbit left the interval"})
    residual = abs(math.log(phin / phi1) - float(orb.phi_partial[-1]))
    ratio = residual / (b - a)
    return LemmaReport(
        check_id="displacement-ratio", measured=ratio, bound=ratio_bound,
        passed=ratio <= ratio_bound, worst_location=xn,
        details={"residual": residual, "interval_length": b - a, "n": n})


# ---------------------------------------------------------------------------
# local doubling of the displacement over a sqrt-scaled window
# ---------------------------------------------------------------------------

def verify_local_doubling(spec: DiffeoSpec, x: float, delta: float,
                          samples: int = 2049) -> LemmaReport:
    """phi(y) <= 4 phi(x) for y in [x, x + delta^(-1/2) sqrt(phi(x))],
    given |phi''| <= delta on [0, 2x] and x in the left half."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if not 0.0 < x <= 0.5:
        return LemmaReport(check_id="local-doubling", measured=math.nan,
                           bound=4.0, passed=False, applicable=False,
                           details={"reason": "x outside the left half"})
    probes = np.linspace(0.0, min(2.0 * x, 1.0), 65)[1:-1]
    second = np.array([derivative(spec, float(t), 2) for t in probes])
    if float(np.max(np.abs(second))) > delta * (1.0 + 1e-6):
        return LemmaReport(check_id="local-doubling", measured=math.nan,
                           bound=4.0, passed=False, applicable=False,
                           details={"max_abs_phi2": float(np.max(np.abs(second))),
                                    "delta": delta})
    phi_x = float(spec.phi(x))
    if phi_x <= 0.0:
        return LemmaReport(check_id="local-doubling", measured=math.nan,
                           bound=4.0, passed=False, applicable=False,
                           details={"reason": "phi(x) not positive"})
    reach = min(x + math.sqrt(phi_x / delta), 1.0)
    ys = np.linspace(x, reach, samples)
    ratios = np.asarray(spec.phi(ys), dtype=float) / phi_x
    worst = int(np.argmax(ratios))
    return LemmaReport(
        check_id="local-doubling", measured=float(ratios[worst]), bound=4.0,
        passed=bool(ratios[worst] <= 4.0), worst_location=float(ys[worst]),
        details={"window": (x, reach), "delta": delta})


# ---------------------------------------------------------------------------
# orbit count vs the integral of 1/phi
# ---------------------------------------------------------------------------

def verify_orbit_integral(spec: DiffeoSpec, x1: float, n: int,
                          rel_tol: float = 1e-8) -> LemmaReport:
    """(1/(n-1)) * integral of dt/phi over [x_1, x_n] lies in [2/3, 2]
    whenever |phi'| <= 1/2 along the way."""
    if n < 2:
        raise ValueError("need n >= 2")
    orb = iterate_orbit(spec, x1, n - 1)
    xn = float(orb.points[-1])
    lo, hi = min(x1, xn), max(x1, xn)
    probes = np.unique(np.concatenate([np.linspace(lo, hi, 4097), orb.points]))
    slopes = np.abs(np.asarray(spec.dphi(probes), dtype=float))
    if float(np.max(slopes)) > 0.5:
        return LemmaReport(check_id="orbit-integral", measured=math.nan,
                           bound=(2.0 / 3.0, 2.0), passed=False,
                           applicable=False,
                           details={"max_abs_dphi": float(np.max(slopes))})
    integral = adaptive_simpson(lambda t: 1.0 / float(spec.phi(t)),
                                x1, xn, rel_tol=rel_tol, max_depth=60)
    measured = integral / (n - 1)
    ok = 2.0 / 3.0 <= measured <= 2.0
    return LemmaReport(
        check_id="orbit-integral", measured=float(measured),
        bound=(2.0 / 3.0, 2.0), passed=ok, worst_location=xn,
        details={"integral": float(integral), "n": n})


# ---------------------------------------------------------------------------
# oscillation of log (f^n)' over a wandering interval
# ---------------------------------------------------------------------------

def verify_derivative_oscillation(spec: DiffeoSpec, window: tuple[float, float],
                                  ns: Sequence[int], alpha: float,
                                  pair_points: int = 16,
                                  spread_bound: float = 10.0) -> LemmaReport:
    """max over pairs of |Phi(n,x) - Phi(n,y)| / n^(1-alpha) across a ladder
    of n; bounded spread stands in for the unobservable constant."""
    lo, hi = window
    if not 0.0 < lo < hi < 1.0:
        raise ValueError("window must lie inside (0,1)")
    f_lo = float(spec.f(lo))
    f_hi = float(spec.f(hi))
    if not (f_lo > hi or f_hi < lo):
        raise ValueError("window must be disjoint from its image")
    ns = tuple(sorted(int(v) for v in ns))
    pts = lo + (np.arange(pair_points) + 0.5) * (hi - lo) / pair_points
    snaps = _phi_checkpoint_sums(spec, pts, ns)
    ratios = []
    for i, n in enumerate(ns):
        row = snaps[i]
        osc = float(np.max(row) - np.min(row))
        ratios.append(osc / n ** (1.0 - alpha))
    spread = max(ratios) / max(min(ratios), 1e-300)
    return LemmaReport(
        check_id="derivative-oscillation", measured=float(spread),
        bound=spread_bound, passed=spread <= spread_bound,
        details={"ratios": dict(zip(ns, ratios)), "alpha": alpha})


# ---------------------------------------------------------------------------
# flat-window oscillation bound near a flat fixed point
# ---------------------------------------------------------------------------

def verify_flat_window(spec: DiffeoSpec, order: int, x: float,
                       ratio_bound: float = 10.0,
                       samples: int = 4097) -> LemmaReport:
    """sup of phi(t)/phi(x) over [x, x + phi(x)^(1/order)], applicable when
    phi(y) <= phi(x)^(1 - 1/(2*order)) <= 1 for y below x."""
    if order < 1:
        raise ValueError("order must be >= 1")
    phi_x = float(spec.phi(x))
    if phi_x <= 0.0:
        return LemmaReport(check_id="flat-window", measured=math.nan,
                           bound=ratio_bound, passed=False, applicable=False,
                           details={"reason": "phi(x) underflows to zero", "x": x})
    gate = phi_x ** (1.0 - 1.0 / (2.0 * order))
    if gate > 1.0:
        return LemmaReport(check_id="flat-window", measured=math.nan,
                           bound=ratio_bound, passed=False, applicable=False,
                           details={"reason": "phi(x) too large", "x": x})
    ys = np.linspace(0.0, x, 1025)[1:-1]
    if ys.size and float(np.max(np.asarray(spec.phi(ys), dtype=float))) > gate:
        return LemmaReport(check_id="flat-window", measured=math.nan,
                           bound=ratio_bound, passed=False, applicable=False,
                           details={"reason": "monotone gate fails", "x": x})
    reach = min(x + phi_x ** (1.0 / order), 1.0)
    ts = np.linspace(x, reach, samples)
    ratios = np.asarray(spec.phi(ts), dtype=float) / phi_x
    worst = int(np.argmax(ratios))
    return LemmaReport(
        check_id="flat-window", measured=float(ratios[worst]),
        bound=ratio_bound, passed=bool(ratios[worst] <= ratio_bound),
        worst_location=float(ts[worst]),
        details={"x": x, "window": (x, reach), "order": order})


# ---------------------------------------------------------------------------
# variational identity for flows
# ---------------------------------------------------------------------------

def verify_flow_identity(flow_spec: DiffeoSpec, x: float, n: int,
                         rel_bound: float = 1e-6) -> LemmaReport:
    """Chain-rule distortion of n flow steps vs the field quotient
    phi(g^n x)/phi(x)."""
    base = flow_spec.meta.get("base")
    if base is None:
        raise ValueError("spec was not built by flow_map")
    phi_x = float(base.phi(x))
    if phi_x <= 1e-8:
        return LemmaReport(check_id="flow-identity", measured=math.nan,
                           bound=rel_bound, passed=False, applicable=False,
                           details={"reason": "field too small at x"})
    if n == 0:
        return LemmaReport(check_id="flow-identity", measured=0.0,
                           bound=rel_bound, passed=True,
                           details={"n": 0})
    orb = iterate_orbit(flow_spec, x, n)
    chain = float(orb.phi_partial[-1])
    direct = math.log(float(base.phi(float(orb.points[-1]))) / phi_x)
    rel = abs(math.expm1(chain - direct))
    return LemmaReport(
        check_id="flow-identity", measured=rel, bound=rel_bound,
        passed=rel <= rel_bound, worst_location=float(orb.points[-1]),
        details={"chain_log": chain, "direct_log": direct, "n": n})


# ---------------------------------------------------------------------------
# oscillatory profile asymptotics
# ---------------------------------------------------------------------------

def oscillation_sum_ratio(alpha: float, beta: float, n_steps: int,
                          rel_tol: float = 0.15) -> LemmaReport:
    """Sum of log(1 + profile'(x_k)) along the exact lattice orbit against
    its predicted leading term (2*pi/(beta*(1-alpha*(beta+1)))) * N^(1-alpha*(beta+1)).

    The lattice point at 1 itself is excluded: the profile derivative
    diverges at the right endpoint.
    """
    if n_steps < 10:
        raise ValueError("need n_steps >= 10")
    damping = alpha * (beta + 1.0)
    if damping >= 1.0:
        raise ValueError("alpha*(beta+1) must be < 1 for a growing sum")
    j = np.arange(2, n_steps + 1, dtype=float)   # x = j^(-beta), j = N..2
    xs = j ** -beta
    terms = np.log1p(np.asarray(hoelder_profile_deriv(alpha, beta, xs), dtype=float))
    total = float(np.sum(terms[::-1]))
    predicted = TWO_PI / (beta * (1.0 - damping)) * n_steps ** (1.0 - damping)
    ratio = total / predicted
    return LemmaReport(
        check_id="oscillation-sum", measured=ratio, bound=(1.0 - rel_tol, 1.0 + rel_tol),
        passed=abs(ratio - 1.0) <= rel_tol,
        details={"sum": total, "predicted": predicted, "n_steps": n_steps})


def profile_deriv_ratio(alpha: float, beta: float, k: int,
                        rel_tol: float = 0.05) -> LemmaReport:
    """profile'(k^(-beta)) against its oscillation amplitude (2*pi/beta) * k^(-alpha*(beta+1))."""
    if k < 2:
        raise ValueError("need k >= 2")
    x = float(k) ** -beta
    value = float(hoelder_profile_deriv(alpha, beta, x))
    predicted = TWO_PI / beta * float(k) ** (-alpha * (beta + 1.0))
    ratio = value / predicted
    return LemmaReport(
        check_id="oscillation-deriv", measured=ratio,
        bound=(1.0 - rel_tol, 1.0 + rel_tol), passed=abs(ratio - 1.0) <= rel_tol,
        details={"value": value, "predicted": predicted, "k": k})
