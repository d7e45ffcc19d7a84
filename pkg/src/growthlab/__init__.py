"""growthlab: numerical laboratory for the derivative growth of iterated
interval diffeomorphisms fixing the endpoints."""

__version__ = "0.1.0"

from .diffeo import (
    DiffeoSpec,
    Displacement,
    ValidationReport,
    derivative,
    evaluate,
    inverse_evaluate,
    validate,
)
from .errors import (
    ConstructionError,
    DomainError,
    GrowthLabError,
    InvalidParameterError,
    InvalidSpecError,
    PrecisionError,
)
from .families import (
    FlatBumpSchedule,
    HoelderSchedule,
    conjugated_translation,
    default_flat_bump_schedule,
    default_hoelder_schedule,
    flat_bump,
    flat_exp,
    flow_map,
    from_callables,
    hoelder_family,
    hoelder_profile,
    hoelder_profile_deriv,
    hoelder_raw_map,
    hyperbolic,
    identity,
    monotonicity_bound,
    polynomial_flat,
    profile_lip_bound,
)
from .fixed_points import (
    FixedPoint,
    FixedPointReport,
    Flat,
    Hyperbolic,
    Parabolic,
    analyze,
    classify_fixed_point,
    find_fixed_points,
    max_log_multiplier,
)
from .orbit import (
    GrowthCurve,
    GrowthRecord,
    Orbit,
    growth_sequence,
    iterate_orbit,
    log_spaced_checkpoints,
    oracle_growth_records,
    phi_sum,
    refine_argmax,
)
from .analysis import (
    ExponentFit,
    LemmaReport,
    check_almost_convexity,
    fit_exponent,
    hoelder_constant,
    oscillation_sum_ratio,
    profile_deriv_ratio,
    seminorm_stability,
    verify_derivative_oscillation,
    verify_displacement_ratio,
    verify_flat_window,
    verify_flow_identity,
    verify_local_doubling,
    verify_orbit_integral,
)
