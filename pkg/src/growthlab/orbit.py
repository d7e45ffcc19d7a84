"""Orbit iteration and growth-sequence estimation in log space.

The derivative of the n-th iterate is accumulated as a compensated sum of
log f' along orbits.  Growth estimates sweep a deterministic start grid
(uniform + geometric endpoint ladder + family seeds + the two endpoints),
then polish the extremal starts by local grid refinement.

Parallel sweeps split the start grid into fixed-size blocks; block contents
never depend on the worker count, and the merge is an exact max/min with
canonical (ascending-start) tie-breaking, so results are bit-identical for
any number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diffeo import DiffeoSpec
from .errors import DomainError, InvalidSpecError

_ESCAPE_TOL = 1e-12
_BLOCK = 1024
_GEOM_DEPTH = 40

WORKERS_ENV = "GROWTHLAB_WORKERS"


@dataclass(frozen=True, eq=False)
class Orbit:
    """Forward orbit x_1..x_{n+1} with partial distortion sums.

    phi_partial[m] is the sum of log f'(x_1..x_m), i.e. log of the derivative
    of the m-th iterate at the start (phi_partial[0] = 0).
    """

    start: float
    points: np.ndarray
    phi_partial: np.ndarray


@dataclass(frozen=True)
class GrowthRecord:
    n: int
    log_gamma: float
    log_max_fwd: float
    log_min_fwd: float
    argmax_start: float
    argmin_start: float
    refined_starts: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class GrowthCurve:
    checkpoints: tuple[int, ...]
    records: tuple[GrowthRecord, ...]
    grid_size: int
    refinement_rounds: int
    starts: np.ndarray = field(repr=False, default=None)

    def log_gammas(self) -> np.ndarray:
        return np.array([r.log_gamma for r in self.records])

    def ns(self) -> np.ndarray:
        return np.array([r.n for r in self.records], dtype=float)


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None:
        if workers < 1:
            raise ValueError("workers must be a positive integer")
        return workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        value = int(env)
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return value
    return os.cpu_count() or 1


def log_spaced_checkpoints(lo: int, hi: int, count: int) -> tuple[int, ...]:
    """Distinct integer checkpoints, logarithmically spaced on [lo, hi]."""
    if lo < 1 or hi < lo or count < 1:
        raise ValueError("need 1 <= lo <= hi and count >= 1")
    raw = np.unique(np.rint(np.logspace(np.log10(lo), np.log10(hi), count)).astype(int))
    return tuple(int(v) for v in raw if lo <= v <= hi)


def iterate_orbit(spec: DiffeoSpec, x1: float, n: int) -> Orbit:
    """Forward orbit of length n with compensated distortion sums; O(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < x1 < 1.0:
        raise DomainError("orbit start must lie in (0,1)")
    points = np.empty(n + 1)
    sums = np.empty(n + 1)
    points[0] = x1
    sums[0] = 0.0
    x = x1
    total = 0.0
    carry = 0.0
    for k in range(1, n + 1):
        x_next, logdf = spec.advance(x)
        x_next = float(x_next)
        logdf = float(logdf)
        if x_next > 1.0 + _ESCAPE_TOL or x_next < -_ESCAPE_TOL:
            raise InvalidSpecError(
                f"orbit escaped [0,1] at step {k}: x={x_next!r}")
        x_next = min(max(x_next, 0.0), 1.0)
        y = logdf - carry
        t = total + y
        carry = (t - total) - y
        total = t
        points[k] = x_next
        sums[k] = total - carry
        x = x_next
    return Orbit(start=x1, points=points, phi_partial=sums)


def _phi_checkpoint_sums(spec: DiffeoSpec, starts: np.ndarray,
                         checkpoints: tuple[int, ...]) -> np.ndarray:
    """Matrix of distortion sums: snapshots[i, j] = Phi(checkpoints[i], starts[j])."""
    x = np.array(starts, dtype=float, copy=True)
    total = np.zeros_like(x)
    carry = np.zeros_like(x)
    out = np.empty((len(checkpoints), x.size))
    cp_iter = 0
    n_max = checkpoints[-1]
    for k in range(1, n_max + 1):
        x_next, logdf = spec.advance(x)
        x_next = np.asarray(x_next, dtype=float)
        hi = float(np.max(x_next))
        lo = float(np.min(x_next))
        if hi > 1.0 + _ESCAPE_TOL or lo < -_ESCAPE_TOL:
            raise InvalidSpecError(f"orbit escaped [0,1] at step {k}")
        if hi > 1.0 or lo < 0.0:
            x_next = np.clip(x_next, 0.0, 1.0)
        y = logdf - carry
        t = total + y
        carry = (t - total) - y
        total = t
        x = x_next
        if k == checkpoints[cp_iter]:
            out[cp_iter] = total - carry
            cp_iter += 1
            if cp_iter == len(checkpoints):
                break
    return out


def phi_sum(spec: DiffeoSpec, x1: float, n: int) -> float:
    """Phi(n, x1): compensated sum of log f' along the orbit."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < x1 < 1.0:
        raise DomainError("orbit start must lie in (0,1)")
    return float(_phi_checkpoint_sums(spec, np.array([x1]), (n,))[0, 0])


def build_start_grid(spec: DiffeoSpec, grid_size: int) -> np.ndarray:
    """Canonical start set: uniform interior grid, geometric endpoint ladder,
    family seeds, and both endpoints; sorted ascending, exact duplicates
    removed."""
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    uniform = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    geom = np.array([2.0 ** -j for j in range(1, _GEOM_DEPTH + 1)]
                    + [1.0 - 2.0 ** -j for j in range(1, _GEOM_DEPTH + 1)])
    seeds = np.array([s for s in spec.suggested_seeds if 0.0 < s < 1.0], dtype=float)
    parts = [uniform, geom, np.array([0.0, 1.0])]
    if seeds.size:
        parts.append(seeds)
    return np.unique(np.concatenate(parts))


def _sweep_blocks(spec, starts, checkpoints, workers):
    """Checkpoint sums over the grid, computed in fixed 1024-point blocks."""
    blocks = [starts[i:i + _BLOCK] for i in range(0, starts.size, _BLOCK)]
    if workers <= 1 or len(blocks) == 1:
        pieces = [_phi_checkpoint_sums(spec, b, checkpoints) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(blocks))) as pool:
            futures = [pool.submit(_phi_checkpoint_sums, spec, b, checkpoints)
                       for b in blocks]
            pieces = [f.result() for f in futures]
    return np.hstack(pieces)


def _top_indices(row: np.ndarray, count: int, largest: bool) -> np.ndarray:
    order = np.lexsort((np.arange(row.size), -row if largest else row))
    return order[:count]


def _local_radius(starts: np.ndarray, idx: int) -> float:
    center = starts[idx]
    gaps = []
    if idx > 0:
        gaps.append(starts[idx] - starts[idx - 1])
    if idx < starts.size - 1:
        gaps.append(starts[idx + 1] - starts[idx])
    radius = max(gaps) if gaps else 1e-3
    return min(radius, 0.5 * center, 0.5 * (1.0 - center))


def _refine_candidates(spec, checkpoints, cand_by_cp, rounds):
    """Iteratively shrink a 17-point window around each candidate (8x per
    round), batching every candidate of every checkpoint into one sweep.

    Returns, per checkpoint index: (starts_evaluated, phi_values)."""
    collected = {i: ([], []) for i in cand_by_cp}
    state = {i: list(c) for i, c in cand_by_cp.items()}
    for _ in range(rounds):
        layout = []
        arrays = []
        offset = 0
        for i in sorted(state):
            for j, (center, radius) in enumerate(state[i]):
                if radius <= 0.0:
                    continue
                pts = np.linspace(center - radius, center + radius, 17)
                pts = pts[(pts > 0.0) & (pts < 1.0)]
                if pts.size == 0:
                    continue
                layout.append((i, j, offset, offset + pts.size))
                arrays.append(pts)
                offset += pts.size
        if not arrays:
            break
        big = np.concatenate(arrays)
        snaps = _phi_checkpoint_sums(spec, big, checkpoints)
        for (i, j, lo, hi) in layout:
            vals = snaps[i, lo:hi]
            pts = big[lo:hi]
            best = int(np.argmax(np.abs(vals)))
            center, radius = state[i][j]
            state[i][j] = (float(pts[best]), radius / 8.0)
            collected[i][0].extend(float(p) for p in pts)
            collected[i][1].extend(float(v) for v in vals)
    return collected


def growth_sequence(spec: DiffeoSpec, n_max: int, grid_size: int,
                    checkpoints, *, refinement_rounds: int = 3,
                    refine_top: int = 4, workers: int | None = None) -> GrowthCurve:
    """Estimate log Gamma_n on a checkpoint ladder.

    For every start on the canonical grid the distortion sum is accumulated
    for n_max steps; each checkpoint records the running max and min over
    starts, refined around the leading candidates.  log_gamma combines both
    directions: the inverse iterate's maximal derivative is 1/min (f^n)'.
    Deterministic for any worker count.
    """
    checkpoints = tuple(int(c) for c in checkpoints)
    if not checkpoints:
        raise ValueError("checkpoint list must not be empty")
    if sorted(set(checkpoints)) != list(checkpoints):
        raise ValueError("checkpoints must be strictly increasing")
    if checkpoints[0] < 1 or checkpoints[-1] > n_max:
        raise ValueError("checkpoints must lie within [1, n_max]")
    workers = resolve_workers(workers)
    starts = build_start_grid(spec, grid_size)
    snaps = _sweep_blocks(spec, starts, checkpoints, workers)

    cand_by_cp = {}
    if refinement_rounds > 0 and refine_top > 0:
        for i in range(len(checkpoints)):
            row = snaps[i]
            picked = []
            for idx in _top_indices(row, refine_top, largest=True):
                picked.append((float(starts[idx]), _local_radius(starts, idx)))
            for idx in _top_indices(row, refine_top, largest=False):
                picked.append((float(starts[idx]), _local_radius(starts, idx)))
            cand_by_cp[i] = picked
        refined = _refine_candidates(spec, checkpoints, cand_by_cp, refinement_rounds)
    else:
        refined = {i: ([], []) for i in range(len(checkpoints))}

    records = []
    for i, n in enumerate(checkpoints):
        row = snaps[i]
        i_max = int(_top_indices(row, 1, largest=True)[0])
        i_min = int(_top_indices(row, 1, largest=False)[0])
        log_max = float(row[i_max])
        arg_max = float(starts[i_max])
        log_min = float(row[i_min])
        arg_min = float(starts[i_min])
        extra_starts, extra_vals = refined.get(i, ([], []))
        for s, v in zip(extra_starts, extra_vals):
            if v > log_max:
                log_max, arg_max = v, s
            if v < log_min:
                log_min, arg_min = v, s
        records.append(GrowthRecord(
            n=n,
            log_gamma=max(log_max, -log_min),
            log_max_fwd=log_max,
            log_min_fwd=log_min,
            argmax_start=arg_max,
            argmin_start=arg_min,
            refined_starts=tuple(extra_starts),
        ))
    return GrowthCurve(
        checkpoints=checkpoints, records=tuple(records),
        grid_size=grid_size, refinement_rounds=refinement_rounds,
        starts=starts,
    )


def refine_argmax(spec: DiffeoSpec, n: int, center: float, radius: float,
                  rounds: int = 3) -> GrowthRecord:
    """Polish an extremal-start candidate for checkpoint n.

    Each round evaluates a 17-point subgrid on [center-radius, center+radius]
    and re-centers on the point with the largest |Phi|, shrinking the radius
    8x.  The returned record is never worse than the incoming candidate.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < center - radius and center + radius < 1.0):
        raise ValueError("refinement window must stay inside (0,1)")
    base = float(_phi_checkpoint_sums(spec, np.array([center]), (n,))[0, 0])
    collected = _refine_candidates(spec, (n,), {0: [(center, radius)]}, rounds)
    starts_eval, vals = collected[0]
    log_max, arg_max = base, center
    log_min, arg_min = base, center
    for s, v in zip(starts_eval, vals):
        if v > log_max:
            log_max, arg_max = v, s
        if v < log_min:
            log_min, arg_min = v, s
    return GrowthRecord(
        n=n, log_gamma=max(log_max, -log_min),
        log_max_fwd=log_max, log_min_fwd=log_min,
        argmax_start=arg_max, argmin_start=arg_min,
        refined_starts=tuple(starts_eval),
    )


def oracle_growth_records(spec: DiffeoSpec, curve: GrowthCurve) -> list[GrowthRecord]:
    """Closed-form growth over exactly the starts a curve examined.

    Requires spec.log_deriv_n.  Used to quantify the gap between the
    iteration engine and a family's exact n-th iterate derivative.
    """
    if spec.log_deriv_n is None:
        raise ValueError("spec does not provide a closed-form iterate derivative")
    records = []
    for rec in curve.records:
        pts = np.concatenate([curve.starts, np.asarray(rec.refined_starts, dtype=float)]) \
            if rec.refined_starts else curve.starts
        vals = np.asarray(spec.log_deriv_n(pts, rec.n), dtype=float)
        i_max = int(np.argmax(vals))
        i_min = int(np.argmin(vals))
        records.append(GrowthRecord(
            n=rec.n,
            log_gamma=float(max(vals[i_max], -vals[i_min])),
            log_max_fwd=float(vals[i_max]),
            log_min_fwd=float(vals[i_min]),
            argmax_start=float(pts[i_max]),
            argmin_start=float(pts[i_min]),
        ))
    return records
