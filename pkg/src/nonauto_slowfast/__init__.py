"""Nonautonomous slow-fast systems: layer fibers, tracking and rate-induced tipping."""

__version__ = "0.1.0"

from .hull import (  # noqa: E402
    ForcingTerm,
    HullMetricConfig,
    NeighborhoodSampler,
    QuasiPeriodicForcing,
    canonical_forcing,
    constant_forcing,
    hull_distance,
    shift,
)
from .maps import (  # noqa: E402
    ArctanGamma,
    ConstantGamma,
    ConstantSlowField,
    FastVariableSlowField,
    LinearGamma,
    LinearSlowField,
    QuasiPeriodicGamma,
    TableGamma,
    fig2_gamma,
)
from .ode import IntegratorConfig, Trajectory, VectorField, integrate, integrate_ensemble  # noqa: E402
from .layer import (  # noqa: E402
    Fiber,
    HyperbolicPair,
    SeedBox,
    dichotomy_exponent,
    inflated_fiber,
    pullback_fiber,
    pullback_fibers,
    riccati_layer,
    riccati_pair,
    uub_check,
)
from .slowfast import SlowFastScenario, comparison_bound_check, reduced_slow, solve_coupled  # noqa: E402
from .tracking import delta_k, equi_attraction_probe, eta_curve, tracking_error  # noqa: E402
from .tipping import TransitionScenario, classify, critical_rate  # noqa: E402
from .config import ConfigError, ScenarioConfig, load_config, parse_config  # noqa: E402
from .presets import PRESETS, apply_preset  # noqa: E402
