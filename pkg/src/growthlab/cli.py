"""Command-line front end: build families from JSON configs, run growth
experiments, classify fixed points, fit exponents and run the verification
checks.

Data files are deterministic byte-for-byte for a given config (numbers are
written with 17 significant digits, LF line endings, no timestamps); run
metadata goes to a sidecar JSON next to the CSV.

Exit codes: 0 pass, 1 domain/verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import analysis, families, fixed_points
from .diffeo import DiffeoSpec, validate as validate_spec
from .errors import GrowthLabError
from .orbit import (
    GrowthCurve,
    GrowthRecord,
    growth_sequence,
    log_spaced_checkpoints,
    resolve_workers,
)

CSV_COLUMNS = ("n", "log_gamma", "log_max_fwd", "log_min_fwd",
               "argmax_start", "argmin_start")

FAMILY_KINDS = {
    "identity": "no parameters",
    "hyperbolic": "c in (-1,1): displacement c*x*(1-x)",
    "polynomial-flat": "k >= 2, c in (0, c_max(k)): displacement c*(x(1-x))^k",
    "conjugated-translation": "c: translation by c in the chart (2x-1)/(x(1-x))",
    "flat-bump": "count >= 0: parked quadratic windows with flat filler",
    "hoelder": "alpha in (0,1), beta(s) in (0, 1/alpha - 1): oscillatory displacement",
    "flat-exp": "c >= 0: displacement c*exp(-1/(x(1-x)))",
    "flow": "base family descriptor, t >= 0, step_tol: time-t map of the base displacement",
}


def build_family(descriptor: dict) -> DiffeoSpec:
    """Construct a spec from a {"kind": ..., "params": {...}} descriptor."""
    kind = descriptor.get("kind")
    params = dict(descriptor.get("params", {}))
    if kind == "identity":
        return families.identity()
    if kind == "hyperbolic":
        return families.hyperbolic(float(params["c"]))
    if kind == "polynomial-flat":
        return families.polynomial_flat(int(params["k"]), float(params["c"]))
    if kind == "conjugated-translation":
        return families.conjugated_translation(float(params["c"]))
    if kind == "flat-bump":
        schedule = families.default_flat_bump_schedule(int(params.get("count", 4)))
        return families.flat_bump(schedule)
    if kind == "hoelder":
        alpha = float(params.get("alpha", 0.5))
        betas = params.get("betas", [params.get("beta", 0.5)])
        betas = tuple(float(b) for b in betas)
        intervals = params.get("intervals")
        if intervals is None:
            edges = np.linspace(0.0, 1.0, len(betas) + 1)
            intervals = tuple((float(edges[i]), float(edges[i + 1]))
                              for i in range(len(betas)))
        else:
            intervals = tuple((float(a), float(b)) for a, b in intervals)
        sched = families.HoelderSchedule(alpha=alpha, betas=betas, intervals=intervals)
        return families.hoelder_family(sched)
    if kind == "flat-exp":
        return families.flat_exp(float(params["c"]))
    if kind == "flow":
        base = build_family(params["base"])
        return families.flow_map(base, float(params.get("t", 1.0)),
                                 float(params.get("step_tol", 1e-10)))
    raise GrowthLabError(f"unknown family kind: {kind!r}")


@dataclass
class ExperimentConfig:
    family: dict
    n_max: int = 100000
    grid_size: int = 4096
    checkpoints: tuple[int, ...] | None = None
    refinement_rounds: int = 3
    fit_mode: str = "power"
    fit_window: tuple[float, float] = (1e3, 1e5)
    out: str | None = None
    verify: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if "family" not in raw:
            raise GrowthLabError("config must contain a 'family' descriptor")
        cfg = cls(family=raw["family"])
        cfg.n_max = int(raw.get("n_max", cfg.n_max))
        cfg.grid_size = int(raw.get("grid_size", cfg.grid_size))
        requested = raw.get("checkpoints")
        if requested is not None:
            cfg.checkpoints = parse_checkpoints(requested, cfg.n_max)
        cfg.refinement_rounds = int(raw.get("refinement_rounds", cfg.refinement_rounds))
        fit = raw.get("fit", {})
        cfg.fit_mode = fit.get("mode", cfg.fit_mode)
        if "window" in fit:
            lo, hi = fit["window"]
            cfg.fit_window = (float(lo), float(hi))
        cfg.out = raw.get("out")
        cfg.verify = dict(raw.get("verify", {}))
        return cfg

    def resolved_checkpoints(self) -> tuple[int, ...]:
        if self.checkpoints is not None:
            return self.checkpoints
        return log_spaced_checkpoints(1, self.n_max, 20)


def parse_checkpoints(requested, n_max: int) -> tuple[int, ...]:
    if isinstance(requested, str):
        if not requested.startswith("logspaced:"):
            raise GrowthLabError(
                "checkpoint string must look like 'logspaced:20'")
        count = int(requested.split(":", 1)[1])
        return log_spaced_checkpoints(1, n_max, count)
    values = sorted({int(v) for v in requested})
    if not values:
        raise GrowthLabError("checkpoint list must not be empty")
    if values[0] < 1 or values[-1] > n_max:
        raise GrowthLabError("checkpoints must lie within [1, n_max]")
    return tuple(values)


def load_config(path: str) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot parse config {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return ExperimentConfig.from_dict(raw)
    except (GrowthLabError, KeyError, TypeError, ValueError) as exc:
        print(f"error: bad config {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_growth_csv(curve: GrowthCurve, path: str) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for r in curve.records:
        lines.append(",".join([str(r.n), _fmt(r.log_gamma), _fmt(r.log_max_fwd),
                               _fmt(r.log_min_fwd), _fmt(r.argmax_start),
                               _fmt(r.argmin_start)]))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_growth_csv(path: str) -> GrowthCurve:
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln]
    header = tuple(lines[0].split(","))
    if header != CSV_COLUMNS:
        raise GrowthLabError(f"unexpected CSV header: {header}")
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        records.append(GrowthRecord(
            n=int(parts[0]), log_gamma=float(parts[1]),
            log_max_fwd=float(parts[2]), log_min_fwd=float(parts[3]),
            argmax_start=float(parts[4]), argmin_start=float(parts[5])))
    return GrowthCurve(checkpoints=tuple(r.n for r in records),
                       records=tuple(records), grid_size=0, refinement_rounds=0)


def _stratum_json(stratum) -> dict:
    if stratum.kind == "hyperbolic":
        return {"type": "hyperbolic", "multiplier": stratum.multiplier}
    if stratum.kind == "parabolic":
        return {"type": "parabolic", "order": stratum.order,
                "coefficient": stratum.coefficient}
    return {"type": "flat", "order": stratum.order}


def _report_json(report) -> dict:
    return {
        "points": [{"location": p.location, "stratum": _stratum_json(p.stratum)}
                   for p in report.points],
        "fixed_intervals": list(map(list, report.fixed_intervals)),
        "V": report.max_abs_log_multiplier,
        "detection_grid": report.detection_grid,
    }


def _lemma_json(rep: analysis.LemmaReport) -> dict:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return str(v)
        if isinstance(v, np.floating):
            return float(v)
        if isinstance(v, (list, tuple)):
            return [clean(u) for u in v]
        if isinstance(v, dict):
            return {str(k): clean(u) for k, u in v.items()}
        return v

    return {
        "check": rep.check_id,
        "measured": clean(rep.measured),
        "bound": clean(rep.bound),
        "passed": rep.passed,
        "applicable": rep.applicable,
        "worst_location": rep.worst_location,
        "details": clean(rep.details),
    }


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


@click.group()
@click.version_option(version=__version__)
def main():
    """Growth-sequence laboratory for interval diffeomorphisms."""


@main.command("family-list")
def family_list():
    """List the family kinds the config schema accepts."""
    for kind, doc in FAMILY_KINDS.items():
        click.echo(f"{kind}: {doc}")


@main.command("validate")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--grid", "probe_count", type=int, default=1000, show_default=True)
def cmd_validate(config_path, probe_count):
    """Check endpoint fixing, monotonicity and derivative positivity."""
    cfg = load_config(config_path)
    try:
        spec = build_family(cfg.family)
    except (GrowthLabError, ValueError) as exc:
        print(f"invalid family: {exc}", file=sys.stderr)
        raise SystemExit(1)
    report = validate_spec(spec, probe_count)
    click.echo(json.dumps({
        "monotone_ok": report.monotone_ok,
        "endpoints_ok": report.endpoints_ok,
        "min_derivative": report.min_derivative,
        "max_derivative": report.max_derivative,
        "probe_count": report.probe_count,
    }, indent=2, sort_keys=True))
    raise SystemExit(0 if report.ok else 1)


@main.command("growth")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="CSV output path (defaults to config's 'out')")
@click.option("--grid", type=int, default=None, help="override grid size")
@click.option("--nmax", type=int, default=None, help="override n_max")
@click.option("--checkpoints", default=None,
              help="override checkpoints: comma list or logspaced:K")
def cmd_growth(config_path, out_path, grid, nmax, checkpoints):
    """Sweep the growth sequence and write a plot-ready CSV."""
    cfg = load_config(config_path)
    if grid is not None:
        cfg.grid_size = grid
    if nmax is not None:
        cfg.n_max = nmax
    if checkpoints is not None:
        try:
            parsed = (checkpoints if checkpoints.startswith("logspaced:")
                      else [int(v) for v in checkpoints.split(",")])
            cfg.checkpoints = parse_checkpoints(parsed, cfg.n_max)
        except (GrowthLabError, ValueError) as exc:
            print(f"error: bad checkpoints: {exc}", file=sys.stderr)
            raise SystemExit(2)
    out = out_path or cfg.out
    if out is None:
        print("error: no output path (--out or config 'out')", file=sys.stderr)
        raise SystemExit(2)
    try:
        spec = build_family(cfg.family)
        workers = resolve_workers()
        curve = growth_sequence(
            spec, cfg.n_max, cfg.grid_size, cfg.resolved_checkpoints(),
            refinement_rounds=cfg.refinement_rounds, workers=workers)
    except (GrowthLabError, ValueError) as exc:
        print(f"growth failed: {exc}", file=sys.stderr)
        raise SystemExit(1)
    write_growth_csv(curve, out)
    sidecar = {
        "config": cfg.family,
        "n_max": cfg.n_max,
        "grid_size": cfg.grid_size,
        "checkpoints": list(cfg.resolved_checkpoints()),
        "refinement_rounds": cfg.refinement_rounds,
        "workers": workers,
        "version": __version__,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    Path(str(out) + ".meta.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    raise SystemExit(0)


@main.command("classify")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--grid", type=int, default=2048, show_default=True)
def cmd_classify(config_path, out_path, grid):
    """Locate and stratify the fixed-point set; report V."""
    cfg = load_config(config_path)
    try:
        spec = build_family(cfg.family)
        report = fixed_points.analyze(spec, grid_size=grid)
    except (GrowthLabError, ValueError) as exc:
        print(f"classification failed: {exc}", file=sys.stderr)
        raise SystemExit(1)
    _emit(_report_json(report), out_path)
    raise SystemExit(0)


@main.command("fit")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(analysis.FIT_MODES), default="power",
              show_default=True)
@click.option("--window", default="1000:100000", show_default=True,
              help="n window LO:HI")
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_fit(csv_path, mode, window, out_path):
    """Fit an asymptotic exponent/rate from a growth CSV."""
    try:
        lo, hi = (float(v) for v in window.split(":"))
    except ValueError:
        print("error: --window must look like LO:HI", file=sys.stderr)
        raise SystemExit(2)
    try:
        curve = read_growth_csv(csv_path)
        fit = analysis.fit_exponent(curve, mode, (lo, hi))
    except (GrowthLabError, ValueError) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        raise SystemExit(1)
    _emit({
        "mode": fit.mode, "slope": fit.slope, "intercept": fit.intercept,
        "r_squared": fit.r_squared, "window": list(fit.window),
        "n_points": fit.n_points,
    }, out_path)
    raise SystemExit(0)


VERIFY_IDS = ("displacement-ratio", "local-doubling", "orbit-integral",
              "derivative-oscillation", "flat-window", "flow-identity",
              "oscillation-sum", "oscillation-deriv", "seminorm-stability")


def _run_verify(check: str, cfg: ExperimentConfig | None) -> analysis.LemmaReport:
    opts = dict(cfg.verify) if cfg else {}
    spec = build_family(cfg.family) if cfg and cfg.family else None

    if check == "displacement-ratio":
        spec = spec or families.polynomial_flat(2, 1.0)
        return analysis.verify_displacement_ratio(
            spec, tuple(opts.get("interval", (0.0, 1.0))),
            float(opts.get("x1", 0.01)), int(opts.get("n", 1000)))
    if check == "local-doubling":
        spec = spec or families.polynomial_flat(2, 0.1)
        return analysis.verify_local_doubling(
            spec, float(opts.get("x", 0.25)), float(opts.get("delta", 0.5)))
    if check == "orbit-integral":
        spec = spec or families.conjugated_translation(0.1)
        return analysis.verify_orbit_integral(
            spec, float(opts.get("x1", 0.1)), int(opts.get("n", 100)))
    if check == "derivative-oscillation":
        spec = spec or families.polynomial_flat(2, 0.01)
        return analysis.verify_derivative_oscillation(
            spec, tuple(opts.get("window", (0.4, 0.4005))),
            opts.get("ns", (100, 1000, 10000)), float(opts.get("alpha", 0.5)))
    if check == "flat-window":
        spec = spec or families.flat_exp(0.1)
        return analysis.verify_flat_window(
            spec, int(opts.get("order", 2)), float(opts.get("x", 2.0 ** -5)))
    if check == "flow-identity":
        if spec is None or spec.kind != "flow":
            base = families.from_callables(
                phi=lambda x: np.asarray(x, float) * (1.0 - np.asarray(x, float)),
                dphi=lambda x: 1.0 - 2.0 * np.asarray(x, float))
            spec = families.flow_map(base, 1.0, 1e-10)
        return analysis.verify_flow_identity(
            spec, float(opts.get("x", 0.25)), int(opts.get("n", 3)),
            float(opts.get("rel_bound", 1e-6)))
    if check == "oscillation-sum":
        return analysis.oscillation_sum_ratio(
            float(opts.get("alpha", 0.3)), float(opts.get("beta", 0.5)),
            int(opts.get("n_steps", 10000)), float(opts.get("rel_tol", 0.15)))
    if check == "oscillation-deriv":
        return analysis.profile_deriv_ratio(
            float(opts.get("alpha", 0.3)), float(opts.get("beta", 0.5)),
            int(opts.get("k", 1000)), float(opts.get("rel_tol", 0.05)))
    if check == "seminorm-stability":
        alpha = float(opts.get("alpha", 0.5))
        p = float(opts.get("p", 1.0))
        b = float(opts.get("b", (p + 1.0) * alpha))

        def model(x):
            xa = np.asarray(x, dtype=float)
            return xa ** b * np.sin(xa ** -p)

        return analysis.seminorm_stability(model, alpha,
                                           int(opts.get("grid_size", 2048)))
    raise GrowthLabError(f"unknown check id: {check}")


@main.command("verify")
@click.option("--lemma", "check", required=True,
              help=f"one of: {', '.join(VERIFY_IDS)}")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_verify(check, config_path, out_path):
    """Run a verification check; exit 0 iff it passes."""
    if check not in VERIFY_IDS:
        print(f"error: unknown check {check!r}; choose from "
              f"{', '.join(VERIFY_IDS)}", file=sys.stderr)
        raise SystemExit(2)
    cfg = load_config(config_path) if config_path else None
    try:
        report = _run_verify(check, cfg)
    except (GrowthLabError, ValueError) as exc:
        print(f"verification failed to run: {exc}", file=sys.stderr)
        raise SystemExit(1)
    _emit(_lemma_json(report), out_path)
    raise SystemExit(0 if (report.passed and report.applicable) else 1)


if __name__ == "__main__":
    main()
