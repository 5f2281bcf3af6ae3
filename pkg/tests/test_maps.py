import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonauto_slowfast.maps import (
    ArctanGamma,
    ConstantGamma,
    ConstantSlowField,
    FastVariableSlowField,
    LinearGamma,
    LinearSlowField,
    TableGamma,
    fig2_gamma,
)

xs = st.floats(-1e3, 1e3, allow_nan=False)


@given(xs)
def test_fig2_gamma_formula(x):
    g = fig2_gamma()
    expected = 0.2 * (math.sin(math.sqrt(2) * x) + math.cos(x / 5))
    assert g.scalar(x) == pytest.approx(expected, abs=1e-12)
    assert float(g(np.array([x]))[0]) == pytest.approx(expected, abs=1e-12)


def test_fig2_gamma_unbounded_limits():
    assert fig2_gamma().limits() is None


@given(xs)
def test_arctan_gamma(x):
    g = ArctanGamma()
    assert g.scalar(x) == pytest.approx(2 / math.pi * math.atan(x), abs=1e-15)
    assert -1 < g.scalar(x) < 1


def test_arctan_limits_and_saturation():
    g = ArctanGamma(2.0)
    assert g.limits() == (-2.0, 2.0)
    assert abs(g.scalar(1e9) - 2.0) < 1e-8


def test_constant_and_linear():
    assert ConstantGamma(0.3).scalar(7.0) == 0.3
    assert LinearGamma(2.0, 1.0).scalar(3.0) == 7.0
    np.testing.assert_allclose(LinearGamma(2.0, 1.0)(np.array([[0.0], [1.0]])), [[1.0], [3.0]])


def test_table_gamma():
    g = TableGamma((0.0, 1.0, 2.0), (0.0, 2.0, 1.0))
    assert g.scalar(0.5) == pytest.approx(1.0)
    assert g.scalar(-5.0) == 0.0 and g.scalar(5.0) == 1.0
    assert g.limits() == (0.0, 1.0)
    with pytest.raises(ValueError):
        TableGamma((0.0, 0.0), (1.0, 2.0))
    with pytest.raises(ValueError):
        TableGamma((0.0,), (1.0,))


def test_slow_fields():
    f = ConstantSlowField(1.0)
    assert f.y_independent
    assert f.scalar_pair(3.0, 9.0) == 1.0
    assert f.closed_form(np.array([2.0]), 3.0)[0] == pytest.approx(5.0)
    lin = LinearSlowField(-1.0, 0.5)
    x = lin.closed_form(np.array([2.0]), 1.3)[0]
    # x' = -x + 0.5 -> x(t) = 0.5 + (2 - 0.5) e^{-t}
    assert x == pytest.approx(0.5 + 1.5 * math.exp(-1.3))
    fv = FastVariableSlowField(2.0)
    assert not fv.y_independent
    assert fv.scalar_pair(0.0, 1.5) == 3.0
    assert fv.closed_form(np.array([0.0]), 1.0) is None


def test_to_dict_roundtrip_keys():
    for g in (fig2_gamma(), ArctanGamma(), TableGamma(), ConstantGamma(1.0), LinearGamma()):
        assert "kind" in g.to_dict()
