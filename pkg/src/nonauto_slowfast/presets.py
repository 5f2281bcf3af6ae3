"""Frozen figure presets: fixed scenario constants, only the output location is configurable."""
from __future__ import annotations

import warnings

from .config import ConfigError, ScenarioConfig, parse_config

__all__ = ["PRESETS", "get_preset", "apply_preset"]

_CANONICAL_FORCING = {
    "offset": 0.962,
    "terms": [
        {"amplitude": -1.0, "frequency": 0.5, "phase": 0.0, "kind": "sin"},
        {"amplitude": -1.0, "frequency": 5.0 ** 0.5, "phase": 0.0, "kind": "sin"},
    ],
}

_QP_GAMMA = {
    "kind": "quasiperiodic-sum",
    "scale": 0.2,
    "terms": [
        {"amplitude": 1.0, "frequency": 2.0 ** 0.5, "kind": "sin"},
        {"amplitude": 1.0, "frequency": 0.2, "kind": "cos"},
    ],
}

_RAW = {
    "fig1": {
        "name": "fig1",
        "forcing": _CANONICAL_FORCING,
        "gamma": {"kind": "constant", "value": 0.0},
        "initial": {"x0": [0.0], "y0": [1.5]},
        "horizons": {"t0": 100.0},
        "epsilon_grid": [0.05],
    },
    "fig2": {
        "name": "fig2",
        "forcing": _CANONICAL_FORCING,
        "gamma": _QP_GAMMA,
        "slow_field": {"kind": "constant-one"},
        "initial": {"x0": [0.0], "y0": [1.5]},
        "horizons": {"t0": 20.0},
        "epsilon_grid": [0.05, 0.2, 0.35, 0.5],
        "tracking": {"mode": "proxy"},
    },
    "fig3": {
        "name": "fig3",
        "forcing": _CANONICAL_FORCING,
        "gamma": {"kind": "arctan", "amplitude": 1.0},
        "slow_field": {"kind": "constant-one"},
        "initial": {"x0": [0.0], "y0": [1.5]},
        "epsilon_grid": [0.8],
        "tipping": {"band": 0.2, "final_fraction": 0.2, "gamma_tol": 1e-3, "eps_lo": 0.05, "eps_hi": 0.8},
    },
}
_RAW["fig2-left"] = dict(_RAW["fig2"], name="fig2-left")
_RAW["fig2-right"] = dict(_RAW["fig2"], name="fig2-right")

PRESETS = {k: parse_config(v) for k, v in _RAW.items()}

# keys a preset does not pin: where output goes and how many workers run
_FREE = {"output"}


def get_preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name]


def _diff(a, b, prefix=""):
    out = []
    if isinstance(a, dict) and isinstance(b, dict):
        for k in b:
            if k in a:
                out += _diff(a[k], b[k], f"{prefix}{k}.")
            else:
                out.append(prefix + k)
        return out
    return [] if a == b else [prefix.rstrip(".")]


def apply_preset(name: str, user: dict | None = None) -> ScenarioConfig:
    """Preset values win; conflicting user keys are ignored with a warning.
    Only the keys in ``_FREE`` are taken from the user document."""
    base = get_preset(name)
    if not user:
        return base
    data = base.model_dump(mode="json")
    user_full = parse_config(user).model_dump(mode="json")
    conflicts = [k for k in _diff(data, {k: user_full[k] for k in user}) if k.split(".")[0] not in _FREE]
    if conflicts:
        warnings.warn(f"preset {name!r} is frozen; ignoring conflicting config keys: {', '.join(sorted(conflicts))}")
    for k in _FREE:
        if k in user:
            data[k] = user_full[k]
    return parse_config(data)
