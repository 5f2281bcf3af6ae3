import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonauto_slowfast.hull import canonical_forcing, constant_forcing
from nonauto_slowfast.layer import riccati_layer
from nonauto_slowfast.maps import ConstantSlowField, FastVariableSlowField, LinearGamma, LinearSlowField, fig2_gamma
from nonauto_slowfast.ode import IntegratorConfig, VectorField, integrate
from nonauto_slowfast.slowfast import (
    PreconditionViolated,
    SlowFastScenario,
    averaged_slow,
    comparison_bound_check,
    coupled_field,
    growth_constants,
    gronwall_check,
    reduced_slow,
    solve_coupled,
    solve_slow_time,
)


def fig2(**kw):
    d = dict(f=ConstantSlowField(1.0), layer=riccati_layer(canonical_forcing(), fig2_gamma()), x0=(0.0,), y0=(1.5,), t0=20.0)
    d.update(kw)
    return SlowFastScenario(**d)


def test_scenario_validation():
    with pytest.raises(ValueError):
        fig2(t0=0.0)
    with pytest.raises(ValueError):
        fig2(epsilons=(0.0,))
    with pytest.raises(ValueError):
        fig2(y0=(1.0, 2.0))
    sc = fig2().with_(t0=5.0)
    assert sc.t0 == 5.0 and sc.n == 1 and sc.m == 1


def test_coupled_slow_variable_is_eps_tau():
    sol = solve_coupled(fig2(), 0.2)
    assert sol.consistent and not sol.blew_up
    assert sol.fast.t1 == pytest.approx(100.0)
    np.testing.assert_allclose(sol.slow.states[:, 0], sol.slow.times, atol=1e-9)
    assert sol.slow.t1 == pytest.approx(20.0)


def test_coupled_field_scalar_path_matches_generic():
    sc = fig2()
    fast = coupled_field(sc, 0.3)
    z = np.array([0.7, 1.2])
    layer = sc.layer
    dy = layer(z[:1][None], z[1:][None], np.array([2.5]), sc.theta[None])[0, 0]
    np.testing.assert_allclose(fast(z, 2.5), [0.3, dy], atol=1e-14)


def test_slow_time_form_matches_fast_time():
    sc = fig2(f=FastVariableSlowField(0.5))
    eps = 0.25
    fast = solve_coupled(sc, eps)
    slow = solve_slow_time(sc, eps)
    np.testing.assert_allclose(slow.times, fast.joint.times * eps, atol=1e-12)
    np.testing.assert_allclose(slow.states, fast.joint.states, atol=1e-9)


def test_blow_up_below_repeller():
    sol = solve_coupled(fig2(y0=(-3.0,)), 0.2)
    assert sol.blew_up
    assert sol.fast.escape_time < 5.0


def test_reduced_slow_closed_form():
    fn = reduced_slow(fig2())
    assert fn.source == "closed-form"
    np.testing.assert_allclose(fn(np.array([0.0, 3.0])).reshape(-1), [0.0, 3.0])
    lin = reduced_slow(fig2(f=LinearSlowField(-1.0, 0.0), x0=(2.0,)))
    assert float(np.asarray(lin(1.0)).reshape(-1)[0]) == pytest.approx(2 * math.exp(-1.0))


def test_averaged_autonomous_layer():
    # p = 1, y* = 1 + a x, so x' = <y*> = 1 + a x
    a = 0.3
    sc = SlowFastScenario(FastVariableSlowField(1.0), riccati_layer(constant_forcing(1.0), LinearGamma(a, 0.0)), (0.0,), (1.0,), 2.0)
    tr = averaged_slow(sc, avg_window=5.0, refresh_dx=1e-3)
    exact = (np.exp(a * tr.times) - 1.0) / a
    np.testing.assert_allclose(tr.states[:, 0], exact, atol=5e-3)
    assert reduced_slow(sc, avg_window=5.0).source == "averaged"


def test_coupled_approaches_averaged_as_eps_shrinks():
    sc = SlowFastScenario(FastVariableSlowField(1.0), riccati_layer(constant_forcing(1.0), LinearGamma(0.3, 0.0)), (0.0,), (1.0,), 2.0)
    avg = averaged_slow(sc, avg_window=5.0, refresh_dx=1e-3)
    errs = []
    for eps in (0.1, 0.01):
        sol = solve_coupled(sc, eps)
        errs.append(abs(sol.slow.states[-1, 0] - avg.states[-1, 0]))
    assert errs[1] < errs[0]


def test_comparison_identical_fields():
    g = VectorField(lambda y, t: np.array([1.0 - y[0] ** 2]), 1)
    rep = comparison_bound_check(g, g, [0.5], (0.0, 3.0), 2.0)
    assert rep.sigma == 0.0
    assert rep.max_ratio == 0.0 and rep.holds


@given(st.floats(1e-3, 0.1), st.floats(0.2, 2.0), st.floats(0.5, 4.0))
def test_comparison_bound_holds(amp, y0, T):
    p = canonical_forcing().scalar(np.zeros(2))
    g1 = VectorField(lambda y, t: np.array([p(t) - y[0] ** 2]), 1)
    g2 = VectorField(lambda y, t: np.array([p(t) - y[0] ** 2 + amp]), 1)
    y1, y2 = integrate(g1, [y0], 0.0, T), integrate(g2, [y0], 0.0, T)
    L = 2.0 * max(np.abs(y1.states).max(), np.abs(y2.states).max())
    rep = comparison_bound_check(g1, g2, [y0], (0.0, T), L)
    assert rep.sigma == pytest.approx(amp)
    assert rep.max_ratio <= 1.0 + 1e-3


def test_comparison_rejects_small_sigma():
    g1 = VectorField(lambda y, t: np.array([-y[0]]), 1)
    g2 = VectorField(lambda y, t: np.array([-y[0] + 0.1]), 1)
    with pytest.raises(PreconditionViolated):
        comparison_bound_check(g1, g2, [1.0], (0.0, 1.0), 1.0, sigma=0.01)
    with pytest.raises(ValueError):
        comparison_bound_check(g1, g2, [1.0], (0.0, 1.0), 0.0)


def test_growth_constants_and_gronwall():
    f = lambda x, y: 2.0 + 3.0 * np.abs(x)  # noqa: E731
    a, b = growth_constants(f, np.linspace(-2, 2, 9), np.linspace(-1, 1, 3))
    assert a == pytest.approx(2.0) and b == pytest.approx(3.0)
    tr = integrate(VectorField(lambda x, t: np.array([2.0 + 3.0 * abs(x[0])]), 1), [0.5], 0.0, 1.0, IntegratorConfig(step=1e-3))
    assert gronwall_check(tr, a, b)
    assert not gronwall_check(tr, 0.0, 0.0)


def test_fig2_slow_growth_bound():
    sol = solve_coupled(fig2(f=FastVariableSlowField(0.1)), 0.2)
    a, b = growth_constants(lambda x, y: 0.1 * y, np.linspace(-5, 5, 11), np.linspace(-2, 2, 41))
    assert gronwall_check(sol.slow, a, b)
