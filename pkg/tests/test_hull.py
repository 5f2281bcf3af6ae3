import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonauto_slowfast.hull import (
    ForcingTerm,
    HullMetricConfig,
    NeighborhoodSampler,
    QuasiPeriodicForcing,
    canonical_forcing,
    constant_forcing,
    hull_distance,
    shift,
    wrap,
)

angles = st.floats(0.0, 2 * math.pi, allow_nan=False, exclude_max=True)
times = st.floats(-200.0, 200.0, allow_nan=False)
pairs = st.tuples(angles, angles)


def test_canonical_value_at_zero(canonical):
    assert canonical(np.zeros(2), 0.0) == pytest.approx(0.962, abs=1e-15)
    assert canonical.dim == 2
    np.testing.assert_allclose(canonical.frequencies, [0.5, math.sqrt(5.0)])


def test_canonical_matches_formula(canonical):
    tau = np.linspace(-30, 30, 101)
    expected = -np.sin(tau / 2) - np.sin(math.sqrt(5) * tau) + 0.962
    np.testing.assert_allclose(canonical(np.zeros(2), tau), expected, atol=1e-13)


def test_scalar_evaluator_agrees(canonical):
    th = np.array([0.3, 2.1])
    p = canonical.scalar(th)
    for tau in (-5.0, 0.0, 1.7, 44.0):
        assert p(tau) == pytest.approx(float(canonical(th, tau)), abs=1e-13)


def test_shared_frequency_shares_coordinate():
    f = QuasiPeriodicForcing((ForcingTerm(1.0, 2.0), ForcingTerm(0.5, 2.0, kind="cos"), ForcingTerm(1.0, 3.0)), 0.1)
    assert f.dim == 2
    tau = 0.37
    expected = 0.1 + math.sin(2 * tau) + 0.5 * math.cos(2 * tau) + math.sin(3 * tau)
    assert float(f(np.zeros(2), tau)) == pytest.approx(expected)


def test_constant_forcing_has_trivial_hull():
    f = constant_forcing(1.0)
    assert f.dim == 0
    assert f(np.zeros(0), 5.0) == 1.0


def test_bad_term_kind():
    with pytest.raises(ValueError):
        ForcingTerm(1.0, 1.0, kind="tan")


@given(pairs, times, times)
def test_shift_group_law(th, s, t):
    om = canonical_forcing().frequencies
    a = shift(shift(np.array(th), s, om), t, om)
    b = shift(np.array(th), s + t, om)
    d = np.abs(np.mod(a - b + math.pi, 2 * math.pi) - math.pi)
    assert np.all(d < 1e-9)


@given(pairs, times)
def test_shift_is_forcing_translation(th, s):
    f = canonical_forcing()
    th = np.array(th)
    tau = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(f(shift(th, s, f.frequencies), tau), f(th, tau + s), atol=1e-9)


@given(pairs, pairs, times)
def test_torus_metric_is_shift_isometric(a, b, s):
    om = canonical_forcing().frequencies
    a, b = np.array(a), np.array(b)
    d0 = hull_distance(a, b)
    d1 = hull_distance(shift(a, s, om), shift(b, s, om))
    assert d1 == pytest.approx(d0, abs=1e-9)


@given(pairs, pairs, pairs)
def test_torus_metric_axioms(a, b, c):
    a, b, c = map(np.array, (a, b, c))
    assert hull_distance(a, a) == 0.0
    assert hull_distance(a, b) == pytest.approx(hull_distance(b, a))
    assert 0.0 <= hull_distance(a, b) <= 1.0
    assert hull_distance(a, c) <= hull_distance(a, b) + hull_distance(b, c) + 1e-12


@given(pairs, pairs, pairs)
def test_compact_open_triangle(a, b, c):
    f = canonical_forcing()
    cfg = HullMetricConfig("compact-open", radii=(5.0, 20.0), weights=(0.5, 0.5))
    a, b, c = map(np.array, (a, b, c))
    dab = hull_distance(a, b, cfg, f)
    assert hull_distance(a, a, cfg, f) == 0.0
    assert hull_distance(a, c, cfg, f) <= dab + hull_distance(b, c, cfg, f) + 1e-12


def test_compact_open_needs_forcing():
    with pytest.raises(ValueError):
        hull_distance(np.zeros(2), np.ones(2), HullMetricConfig("compact-open"))


def test_metric_config_validation():
    with pytest.raises(ValueError):
        HullMetricConfig("euclid")
    with pytest.raises(ValueError):
        HullMetricConfig("compact-open", radii=(1.0,), weights=(0.5, 0.5))


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_range(v):
    w = float(wrap(v))
    assert 0.0 <= w < 2 * math.pi


def test_sampler_radii_nested():
    s = NeighborhoodSampler()
    small, big = s.radii(0.05), s.radii(0.1)
    assert set(np.round(small, 12)) <= set(np.round(big, 12))
    np.testing.assert_allclose(s.radii(0.06), [0.0, 0.025, 0.05, 0.06])
    np.testing.assert_allclose(s.radii(0.0), [0.0])


def test_sampler_offsets_center_first_and_bounded():
    s = NeighborhoodSampler()
    dh, dx = s.offsets(0.1, 2, 1)
    assert np.all(dh[0] == 0) and np.all(dx[0] == 0)
    assert np.max(np.abs(dh)) <= math.pi * 0.1 + 1e-12
    assert np.max(np.abs(dx)) <= 0.1 + 1e-12
    # torus-angle radius of every hull offset is <= delta
    assert np.max(np.abs(dh)) / math.pi <= 0.1 + 1e-12


def test_sampler_seeded():
    a = NeighborhoodSampler(n_boundary=5, seed=3).hull_directions(2)
    b = NeighborhoodSampler(n_boundary=5, seed=3).hull_directions(2)
    c = NeighborhoodSampler(n_boundary=5, seed=4).hull_directions(2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
