import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from casimir_polder.profiles import (
    DimensionlessProfile,
    HeightProfile,
    ProfileError,
    ProfileKind,
    height,
    metric_factor,
    reduce,
)

amps = st.floats(0.01, 10.0)
omegas = st.floats(0.05, 10.0)
phases = st.floats(-10.0, 10.0)
xs = st.floats(-50.0, 50.0)


def test_flat_height_and_metric():
    p = reduce(HeightProfile.flat(), 2.0)
    x = np.linspace(-5, 5, 11)
    assert np.all(height(p, x) == 0.0)
    assert np.all(metric_factor(p, x) == 1.0)


def test_sine_height_matches_parametric_form():
    p = reduce(HeightProfile.sine(0.5, 2.0, 0.3), 2.0)
    assert p.a == 0.25 and p.nu == 4.0
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(p.height(x), 0.25 * np.sin(4.0 * x + 0.3), rtol=0, atol=1e-15)


def test_metric_factor_at_slope_extremes():
    # omega*A = 1, cos(nu x + phi) = 1 at x = 0 for phi = 0
    p = reduce(HeightProfile.sine(1.0, 1.0, 0.0), 3.0)
    assert metric_factor(p, 0.0) == pytest.approx(math.sqrt(2), abs=1e-15)
    # omega*A = 2, cos = 0 at x = 0 for phi = pi/2
    q = reduce(HeightProfile.sine(1.0, 2.0, math.pi / 2), 3.0)
    assert metric_factor(q, 0.0) == pytest.approx(1.0, abs=1e-15)


@given(amps, omegas, phases, xs, st.sampled_from(["sine", "sawtooth"]))
def test_metric_factor_at_least_one(A, w, phi, x, kind):
    p = reduce(HeightProfile(ProfileKind(kind), A, w, phi), 1.0)
    assert p.metric_factor(x) >= 1.0


def test_metric_factor_equals_one_only_at_slope_zeros():
    p = reduce(HeightProfile.sine(1.0, 1.0, 0.0), 1.0)
    x0 = math.pi / 2
    assert p.metric_factor(x0) == pytest.approx(1.0, abs=1e-15)
    assert p.metric_factor(x0 + 1e-3) > 1.0


@given(amps, omegas, phases, st.floats(0.1, 10.0), st.floats(0.01, 100.0), st.sampled_from(["mean", "local"]))
def test_reduce_scale_invariance(A, w, phi, H, lam, ref):
    a = reduce(HeightProfile.sine(A, w, phi, reference=ref), H)
    b = reduce(HeightProfile.sine(lam * A, w / lam, phi, reference=ref), lam * H)
    assert a.kind == b.kind and a.phase == b.phase and a.reference == b.reference
    assert a.a == pytest.approx(b.a, rel=1e-14)
    assert a.nu == pytest.approx(b.nu, rel=1e-14)


@given(amps, omegas, phases, xs)
def test_sine_mirror_symmetry(A, w, phi, x):
    p = reduce(HeightProfile.sine(A, w, phi), 1.0)
    m = reduce(HeightProfile.sine(A, w, math.pi - phi), 1.0)
    assert p.height(-x) == pytest.approx(m.height(x), abs=1e-9 * (1 + A))


@given(amps, omegas, phases, xs)
def test_phase_periodicity(A, w, phi, x):
    p = reduce(HeightProfile.sine(A, w, phi), 1.0)
    q = reduce(HeightProfile.sine(A, w, phi + 2 * math.pi), 1.0)
    assert p.height(x) == pytest.approx(q.height(x), abs=1e-9 * (1 + A))


def test_local_reference_puts_surface_at_origin_under_sphere():
    p = reduce(HeightProfile.sine(1.0, 2.0, -math.pi / 2, reference="local"), 0.5)
    assert p.height(0.0) == 0.0
    # trough under the sphere: everything else lies above
    x = np.linspace(-10, 10, 2001)
    assert np.all(p.height(x) >= -1e-15)
    assert p.max_height() == pytest.approx(4.0)


def test_sawtooth_is_triangle_wave():
    p = reduce(HeightProfile.sawtooth(1.0, 1.0, 0.0), 1.0)
    assert p.height(math.pi / 2) == pytest.approx(1.0)
    assert p.height(-math.pi / 2) == pytest.approx(-1.0)
    assert p.height(0.0) == pytest.approx(0.0, abs=1e-15)
    assert p.height(math.pi / 4) == pytest.approx(0.5)
    # slope magnitude 2/pi * omega*A, left-sided at the kinks
    assert p.slope(0.1) == pytest.approx(2 / math.pi)
    assert p.slope(math.pi / 2) == pytest.approx(2 / math.pi)
    assert p.slope(math.pi / 2 + 1e-9) == pytest.approx(-2 / math.pi)


def test_sawtooth_kinks():
    p = reduce(HeightProfile.sawtooth(1.0, 2.0, -math.pi / 2), 1.0)
    k = p.kinks(-2.0, 2.0)
    np.testing.assert_allclose(k, np.arange(-1, 2) * math.pi / 2, atol=1e-15)
    assert p.is_even


def test_tabulated_reproduces_sine():
    x = np.linspace(-10, 10, 801)
    samples = np.column_stack([x, 0.5 * np.sin(1.3 * x + 0.2)])
    t = reduce(HeightProfile.tabulated(samples), 1.0)
    s = reduce(HeightProfile.sine(0.5, 1.3, 0.2), 1.0)
    xx = np.linspace(-9.9, 9.9, 997)
    # monotone cubic flattens at extrema, so the error is O(dx^2 |h''|) there
    dx, curv = x[1] - x[0], 0.5 * 1.3**2
    np.testing.assert_allclose(t.height(xx), s.height(xx), rtol=0, atol=dx**2 * curv)
    np.testing.assert_allclose(t.slope(xx), s.slope(xx), rtol=0, atol=dx * curv)


def test_tabulated_out_of_range_raises():
    t = reduce(HeightProfile.tabulated([(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]), 1.0)
    with pytest.raises(ProfileError):
        t.height(2.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="sine", amplitude=-1.0),
        dict(kind="sine", amplitude=1.0, omega=0.0),
        dict(kind="sine", amplitude=1.0, phase=math.inf),
        dict(kind="tabulated", samples=((0.0, 0.0),)),
        dict(kind="tabulated", samples=((1.0, 0.0), (0.0, 1.0))),
        dict(kind="sine", reference="bottom"),
    ],
)
def test_invalid_profiles_rejected(kwargs):
    with pytest.raises((ProfileError, ValueError)):
        HeightProfile(**kwargs)


@pytest.mark.parametrize("H", [0.0, -1.0, math.nan])
def test_reduce_rejects_bad_separation(H):
    with pytest.raises(ProfileError):
        reduce(HeightProfile.flat(), H)


def test_dimensionless_profile_is_immutable():
    p = reduce(HeightProfile.sine(1.0, 1.0), 1.0)
    assert isinstance(p, DimensionlessProfile)
    with pytest.raises(AttributeError):
        p.a = 2.0
