import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from casimir_polder.kernels import GeometryError, m11, m12, m21, m22_inv_monopole, sphere_chord
from casimir_polder.profiles import HeightProfile, reduce
from casimir_polder.specfun import bessel_k0

FLAT = reduce(HeightProfile.flat(), 1.0)
K0_1 = 0.421024438240708


def test_m11_flat_value():
    assert m11(1.0, 0.3, 1.3, FLAT) == pytest.approx(K0_1 / (2 * math.pi), rel=1e-14)
    assert m11(1.0, 0.3, 1.3, FLAT) == pytest.approx(0.0670086, abs=1e-6)


def test_m12_flat_values():
    assert m12(1.0, 0.0, FLAT) == pytest.approx(K0_1 / (2 * math.pi), rel=1e-14)
    assert m12(0.5, math.sqrt(3), FLAT) == pytest.approx(K0_1 / (2 * math.pi), rel=1e-14)


def test_m12_sine_trough():
    p = reduce(HeightProfile.sine(1.0, 1.0, -math.pi / 2), 1.0)
    assert sphere_chord(p, 0.0) == pytest.approx(2.0)
    assert m12(1.0, 0.0, p) == pytest.approx(bessel_k0(2.0) / (2 * math.pi), rel=1e-14)
    assert m12(1.0, 0.0, p) == pytest.approx(0.0181274, abs=1e-6)
    assert m21 is m12


def test_underflow_cutoff():
    assert m11(30.0, 0.0, 20.0, FLAT) == 0.0
    assert m11(30.0, 0.0, 19.999, FLAT) > 0.0


profiles = st.builds(
    lambda a, w, phi: reduce(HeightProfile.sine(a, w, phi), 1.0),
    st.floats(0.0, 0.9), st.floats(0.1, 5.0), st.floats(-4.0, 4.0),
)


@given(profiles, st.floats(0.01, 20.0), st.floats(-10, 10), st.floats(-10, 10))
def test_m11_symmetric_and_positive(p, q, x, xp):
    if x == xp:
        return
    a, b = m11(q, x, xp, p), m11(q, xp, x, p)
    assert a == b
    assert a >= 0.0


@given(st.floats(0.01, 20.0), st.floats(-10, 10), st.floats(0.01, 5.0))
def test_m11_flat_depends_on_distance_only(q, x, d):
    assert m11(q, x, x + d, FLAT) == pytest.approx(m11(q * d, 0.0, 1.0, FLAT), rel=1e-13)


@given(st.floats(0.01, 10.0), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_m12_decays_with_chord(q, x1, dx):
    assert m12(q, x1 + dx, FLAT) <= m12(q, x1, FLAT)


def test_coincident_points_rejected():
    with pytest.raises(GeometryError):
        m11(1.0, 0.5, 0.5, FLAT)
    touching = reduce(HeightProfile.sine(1.0, 1.0, math.pi / 2), 1.0)
    with pytest.raises(GeometryError):
        m12(1.0, 0.0, touching)


def test_monopole_limits():
    assert m22_inv_monopole(1e-8, 1.0) == pytest.approx(1 / (4 * math.pi), rel=1e-7)
    assert m22_inv_monopole(0.0, 2.0) == pytest.approx(1 / (4 * math.pi * 8))
    assert m22_inv_monopole(50.0, 1.0) == pytest.approx(50 / (2 * math.pi), rel=1e-10)
    assert m22_inv_monopole(-3.7, 0.2) == m22_inv_monopole(3.7, 0.2)


@given(st.floats(-100, 100).filter(lambda z: z != 0), st.floats(1e-3, 10.0))
def test_monopole_positive(z, r):
    assert m22_inv_monopole(z, r) > 0


def test_monopole_rejects_bad_radius():
    with pytest.raises(ValueError):
        m22_inv_monopole(1.0, 0.0)
