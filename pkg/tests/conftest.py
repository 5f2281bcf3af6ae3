import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.register_profile("thorough", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from nonauto_slowfast.hull import canonical_forcing  # noqa: E402
from nonauto_slowfast.layer import SeedBox, riccati_layer, repeller_trajectory  # noqa: E402
from nonauto_slowfast.maps import fig2_gamma  # noqa: E402


@pytest.fixture(scope="session")
def canonical():
    return canonical_forcing()


@pytest.fixture(scope="session")
def fig1_layer(canonical):
    return riccati_layer(canonical)


@pytest.fixture(scope="session")
def fig2_layer(canonical):
    return riccati_layer(canonical, fig2_gamma())


@pytest.fixture(scope="session")
def basin_seeds(fig1_layer):
    """Seeds above the repeller of the canonical equation, relative to Gamma(x)."""
    rep = repeller_trajectory(fig1_layer, np.zeros(2), [0.0], 0.0, 100.0)
    r_max = float(rep.states.max())
    return SeedBox.interval(r_max + 0.1, r_max + 3.0, 0.25, relative=True)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call" or "test_acceptance" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], key, props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, key, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if key == 'passed' else 'FAIL'}  {detail}")
