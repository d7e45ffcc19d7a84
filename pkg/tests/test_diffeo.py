import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab import families
from growthlab.diffeo import (
    Displacement,
    derivative,
    evaluate,
    inverse_evaluate,
    inverse_evaluate_many,
    validate,
)
from growthlab.errors import DomainError, InvalidSpecError
from growthlab.numerics import bisect_increasing

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def shipped_specs():
    return [
        families.identity(),
        families.hyperbolic(0.5),
        families.hyperbolic(-0.3),
        families.polynomial_flat(2, 1.0),
        families.polynomial_flat(3, families.monotonicity_bound(3) / 2),
        families.conjugated_translation(1.0),
        families.conjugated_translation(-0.5),
        families.flat_exp(0.1),
    ]


def test_evaluate_identity():
    assert evaluate(families.identity(), 0.37) == 0.37


def test_evaluate_conjugated_translation_golden():
    # psi(1/2) = 0, so f(1/2) solves (2y-1)/(y(1-y)) = 1, i.e. y^2 + y - 1 = 0
    spec = families.conjugated_translation(1.0)
    value = evaluate(spec, 0.5)
    assert value == pytest.approx(GOLDEN, abs=1e-14)
    # independent bisection oracle for the same equation
    psi = lambda y: (2 * y - 1) / (y * (1 - y))
    oracle = bisect_increasing(psi, 1e-9, 1 - 1e-9, 1.0, 1e-13)
    assert value == pytest.approx(oracle, abs=1e-9)


def test_evaluate_raw_oscillatory_map():
    # x + profile(x) at x = 1/10 with unit shape exponent steps to 1/9
    spec = families.hoelder_raw_map(0.5, 1.0)
    assert evaluate(spec, 0.1) == pytest.approx(1.0 / 9.0, abs=1e-15)


def test_evaluate_domain_error():
    with pytest.raises(DomainError):
        evaluate(families.identity(), 1.2)


def test_evaluate_endpoints_exact():
    for spec in shipped_specs():
        assert evaluate(spec, 0.0) == 0.0
        assert evaluate(spec, 1.0) == 1.0


def test_derivative_identity():
    assert derivative(families.identity(), 0.4) == 1.0


def test_derivative_hyperbolic_analytic():
    spec = families.hyperbolic(0.5)
    assert derivative(spec, 0.0) == pytest.approx(1.5)
    assert derivative(spec, 1.0) == pytest.approx(0.5)
    assert derivative(spec, 0.25, 2) == pytest.approx(-1.0)


def test_derivative_polynomial_second_order():
    spec = families.polynomial_flat(2, 1.0)
    assert derivative(spec, 0.0, 2) == pytest.approx(2.0)
    # cross-check the closed form against finite differences away from 0
    fd = families.from_callables(phi=spec.phi, dphi=spec.dphi)
    fd = derivative(fd, 0.3, 2)
    assert fd == pytest.approx(derivative(spec, 0.3, 2), rel=1e-6)


def test_first_derivative_matches_finite_difference():
    xs = np.linspace(1e-3, 1.0 - 1e-3, 211)
    for spec in shipped_specs():
        h = 1e-6
        fd = (np.asarray(spec.f(xs + h)) - np.asarray(spec.f(xs - h))) / (2 * h)
        analytic = np.asarray(spec.df(xs), dtype=float)
        mask = np.abs(analytic) > 1e-12
        assert np.max(np.abs(fd[mask] / analytic[mask] - 1.0)) < 1e-6


def test_inverse_identity():
    assert inverse_evaluate(families.identity(), 0.42) == pytest.approx(0.42, abs=1e-12)


def test_inverse_round_trip():
    spec = families.hyperbolic(0.5)
    y = evaluate(spec, 0.3)
    assert inverse_evaluate(spec, y, 1e-12) == pytest.approx(0.3, abs=1e-10)


def test_inverse_conjugated_translation():
    spec = families.conjugated_translation(1.0)
    assert inverse_evaluate(spec, GOLDEN, 1e-13) == pytest.approx(0.5, abs=1e-10)


@given(st.floats(min_value=1e-3, max_value=1.0 - 1e-3))
@settings(max_examples=60, deadline=None)
def test_round_trip_property(x):
    for spec in (families.hyperbolic(0.5), families.polynomial_flat(2, 1.0),
                 families.conjugated_translation(1.0)):
        y = evaluate(spec, x)
        back = inverse_evaluate(spec, y, 1e-12)
        assert abs(back - x) <= 1e-10


def test_inverse_rejects_non_monotone():
    bad = families.from_callables(
        phi=lambda x: -2.0 * np.asarray(x, float) * (1 - np.asarray(x, float)),
        dphi=lambda x: -2.0 * (1 - 2 * np.asarray(x, float)))
    with pytest.raises(InvalidSpecError):
        inverse_evaluate(bad, 0.5, 1e-10)


def test_inverse_many():
    spec = families.conjugated_translation(1.0)
    ys = np.linspace(0.05, 0.95, 19)
    xs = inverse_evaluate_many(spec, ys)
    assert np.max(np.abs(np.asarray(spec.f(xs)) - ys)) < 1e-12


def test_validate_identity():
    rep = validate(families.identity(), 100)
    assert rep.monotone_ok and rep.endpoints_ok
    assert rep.min_derivative == 1.0


def test_validate_hyperbolic_extremes():
    rep = validate(families.hyperbolic(0.5), 1000)
    assert rep.monotone_ok
    assert rep.min_derivative == pytest.approx(0.5)
    assert rep.max_derivative == pytest.approx(1.5)


def test_validate_flags_bad_custom_map():
    # steep overshoot: f' changes sign inside the interval
    bad = families.from_callables(
        phi=lambda x: 1.5 * np.asarray(x, float) * (1 - np.asarray(x, float)),
        dphi=lambda x: 1.5 * (1 - 2 * np.asarray(x, float)))
    rep = validate(bad, 1000)
    assert not rep.monotone_ok
    assert rep.min_derivative < 0.0


def test_validate_all_shipped_families():
    for spec in shipped_specs():
        rep = validate(spec, 1024)
        assert rep.monotone_ok and rep.endpoints_ok, spec.kind
        assert rep.min_derivative > 0.0


def test_displacement_wrapper():
    spec = families.hyperbolic(0.5)
    disp = Displacement(spec)
    assert disp(0.0) == 0.0
    assert disp(1.0) == 0.0
    assert disp(0.5) == pytest.approx(0.125)
    assert disp.derivative(0.5) == pytest.approx(0.0)
    xs = np.linspace(0.01, 0.99, 99)
    assert np.all(np.asarray(disp(xs)) > 0.0)
