"""Independent check of the proxy tracking error with scipy's DOP853."""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nonauto_slowfast.hull import canonical_forcing
from nonauto_slowfast.layer import riccati_layer
from nonauto_slowfast.maps import ConstantSlowField, fig2_gamma
from nonauto_slowfast.slowfast import SlowFastScenario
from nonauto_slowfast.tracking import sample_grid, tracking_error

P = canonical_forcing().scalar(np.zeros(2))
G = fig2_gamma().scalar


def pulled_back(rhs, t_end, spinup=50.0, y_start=10.0):
    sol = solve_ivp(rhs, (-spinup, t_end), [y_start], method="DOP853", rtol=1e-11, atol=1e-12, dense_output=True)
    assert sol.success
    return sol.sol


@pytest.mark.parametrize("eps", [0.35, 0.2])
def test_proxy_sup_error_matches_dop853(eps):
    tau_end = 20.0 / eps
    a_eps = pulled_back(lambda t, y: P(t) - (y - G(eps * t)) ** 2, tau_end, y_start=G(-50 * eps) + 10.0)
    base = pulled_back(lambda t, y: P(t) - y**2, tau_end)
    taus = sample_grid(0.0, tau_end)
    eta = base(taus)[0] + np.array([G(eps * t) for t in taus])
    oracle = float(np.abs(a_eps(taus)[0] - eta).max())
    sc = SlowFastScenario(ConstantSlowField(1.0), riccati_layer(canonical_forcing(), fig2_gamma()), (0.0,), (1.5,), 20.0)
    ours = tracking_error(sc, eps, "proxy").sup_error
    assert ours == pytest.approx(oracle, abs=1e-6)
    assert math.isfinite(ours)
