import math

import numpy as np
import pytest

from nonauto_slowfast.hull import constant_forcing
from nonauto_slowfast.maps import ArctanGamma, TableGamma, fig2_gamma
from nonauto_slowfast.ode import IntegratorConfig
from nonauto_slowfast.tipping import (
    PastPairUnavailable,
    TransitionScenario,
    classify,
    critical_rate,
    surface_grid,
    transition_curve,
)


@pytest.fixture(scope="module")
def toy():
    """Autonomous frozen equations y' = 1 - (y - Gamma)^2 with a steep ramp: tips for fast ramps."""
    return TransitionScenario(ArctanGamma(2.0), constant_forcing(1.0), gamma_tol=1e-2)


def test_saturation_arctan():
    ts = TransitionScenario()
    Xp, Xf = ts.saturation()
    expected = math.tan(math.pi / 2 * (1 - 1e-3))
    assert Xp == pytest.approx(expected, rel=1e-6)
    assert Xf == pytest.approx(expected, rel=1e-6)
    t_a, t_b = ts.window(0.5)
    assert t_a == pytest.approx(-expected / 0.5) and t_b == pytest.approx(expected / 0.5)


def test_validation():
    with pytest.raises(ValueError):
        TransitionScenario(fig2_gamma())
    with pytest.raises(ValueError):
        TransitionScenario(final_fraction=1.0)
    with pytest.raises(ValueError):
        TransitionScenario(band=0.0)
    with pytest.raises(ValueError):
        classify(TransitionScenario(), 0.0)


def test_canonical_tracks_at_08():
    v = classify(TransitionScenario(), 0.8)
    assert v.outcome == "tracks"
    assert v.evidence < 0.2
    assert v.final_dists is not None and v.final_dists.max() == v.evidence


def test_canonical_tracks_slow_ramp():
    # a long window at eps = 0.01: coarser saturation and step keep the run short
    ts = TransitionScenario(gamma_tol=0.02)
    assert classify(ts, 0.01, cfg=IntegratorConfig(step=0.02)).outcome == "tracks"


def test_toy_slow_ramp_tracks_fast_ramp_tips(toy):
    assert classify(toy, 0.5).outcome == "tracks"
    tip = classify(toy, 5.0)
    assert tip.outcome == "tips"
    t_a, t_b = toy.window(5.0)
    assert t_a < tip.evidence < t_b


def test_toy_critical_rate(toy):
    res = critical_rate(toy, 0.5, 5.0, tol=1e-2)
    assert res.found
    lo, hi = res.bracket
    assert hi - lo <= 1e-2
    assert classify(toy, lo).outcome == "tracks"
    assert classify(toy, hi).outcome == "tips"
    assert 0.5 < res.epsilon_c < 5.0


def test_critical_rate_not_found_and_errors(toy):
    res = critical_rate(toy, 0.3, 0.6, scan=[0.4])
    assert not res.found and res.epsilon_c is None
    assert [e for e, _ in res.verdicts] == [0.3, 0.6, 0.4]
    with pytest.raises(ValueError):
        critical_rate(toy, 5.0, 6.0)
    with pytest.raises(ValueError):
        critical_rate(toy, 0.6, 0.3)


def test_past_pair_unavailable():
    ts = TransitionScenario(TableGamma((0.0, 1.0), (0.0, 1.0)), constant_forcing(-1.0))
    with pytest.raises(PastPairUnavailable):
        classify(ts, 0.5)


def test_curve_exports():
    ts = TransitionScenario()
    v = classify(ts, 0.8, keep_trajectory=True)
    curve = transition_curve(ts, v, n=500)
    assert curve.shape == (500, 4)
    assert curve[0, 1] == pytest.approx(-1.0, abs=1e-3)
    assert curve[-1, 1] == pytest.approx(1.0, abs=1e-3)
    surf = surface_grid(ts, np.linspace(0, 10, 11), [-0.5, 0.0, 0.5])
    assert surf.shape == (33, 3)
    np.testing.assert_allclose(surf[11:22, 2] - surf[:11, 2], 0.5)
    with pytest.raises(ValueError):
        transition_curve(ts, classify(ts, 0.8))
