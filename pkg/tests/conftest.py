"""Shared fixtures; the heavy growth sweeps are computed once per session."""

import time

import pytest

from growthlab import families, orbit


class TimedCurve:
    def __init__(self, curve, seconds):
        self.curve = curve
        self.seconds = seconds


def _timed(spec, n_max, grid, cps, **kw):
    t0 = time.perf_counter()
    curve = orbit.growth_sequence(spec, n_max, grid, cps, **kw)
    return TimedCurve(curve, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def curve_poly2():
    spec = families.polynomial_flat(2, 1.0)
    return _timed(spec, 100000, 4096,
                  orbit.log_spaced_checkpoints(1000, 100000, 20), workers=1)


@pytest.fixture(scope="session")
def curve_conj():
    spec = families.conjugated_translation(1.0)
    return _timed(spec, 100000, 4096,
                  orbit.log_spaced_checkpoints(1000, 100000, 20), workers=1)


@pytest.fixture(scope="session")
def curve_poly3():
    spec = families.polynomial_flat(3, families.monotonicity_bound(3) / 2)
    return _timed(spec, 100000, 4096,
                  orbit.log_spaced_checkpoints(1000, 100000, 20), workers=1)


@pytest.fixture(scope="session")
def curve_poly4():
    spec = families.polynomial_flat(4, families.monotonicity_bound(4) / 2)
    return _timed(spec, 100000, 4096,
                  orbit.log_spaced_checkpoints(1000, 100000, 20), workers=1)


@pytest.fixture(scope="session")
def curve_hyperbolic():
    spec = families.hyperbolic(0.5)
    return _timed(spec, 200, 256, tuple(range(50, 201, 10)), workers=1)


@pytest.fixture(scope="session")
def curve_flat_exp():
    spec = families.flat_exp(0.1)
    return _timed(spec, 100000, 2048,
                  orbit.log_spaced_checkpoints(100, 100000, 25),
                  refinement_rounds=2, workers=1)


@pytest.fixture(scope="session")
def hoelder_spec():
    return families.hoelder_family(families.default_hoelder_schedule(0.5, 0.5))


@pytest.fixture(scope="session")
def curve_hoelder(hoelder_spec):
    return _timed(hoelder_spec, 100000, 512,
                  orbit.log_spaced_checkpoints(1000, 100000, 12),
                  refinement_rounds=1, workers=1)


@pytest.fixture(scope="session")
def flat_bump_spec():
    return families.flat_bump(families.default_flat_bump_schedule(4))


@pytest.fixture(scope="session")
def curve_flat_bump(flat_bump_spec):
    horizons = flat_bump_spec.meta["schedule"].horizons
    return _timed(flat_bump_spec, horizons[-1], 256, horizons,
                  refinement_rounds=1, workers=1)
