"""Modified Bessel functions K0 and K1 (plus I0) for positive real arguments.

Two-branch evaluators: power series in ``t = z^2/4`` for ``z < 2`` and a
Chebyshev expansion of ``exp(z) * sqrt(z) * K_n(z)`` in ``y = 4/z - 1`` for
``z >= 2``.  The Chebyshev tables are frozen output of
``scripts/gen_bessel_coeffs.py``.

The scalar kernels are numba-compiled so the matrix assembly can call them
directly; the public functions validate their input and broadcast over
numpy arrays.  Above ``Z_UNDERFLOW`` the unscaled K functions return 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, vectorize

EULER_GAMMA = 0.57721566490153286061
Z_UNDERFLOW = 600.0

_CHEB_K0 = np.array([
    1.2201515410329777273,
    -3.1448101311964500543e-2,
    1.5698838857300533749e-3,
    -1.2849549581627802638e-4,
    1.3949813718876499364e-5,
    -1.8317555227191194848e-6,
    2.7668136394450150761e-7,
    -4.6604898976879476656e-8,
    8.5740340174142260858e-9,
    -1.6975345093890615156e-9,
    3.5773972814003284472e-10,
    -7.9574892444773970377e-11,
    1.855949114954926555e-11,
    -4.5145978833745191751e-12,
    1.1403405882073442347e-12,
    -2.9800969231481783548e-13,
    8.0328907750683743694e-14,
    -2.2275133267462963604e-14,
    6.3400764762766459661e-15,
    -1.8485933779209071694e-15,
    5.5120559994043333649e-16,
    -1.6782311257549006383e-16,
    5.2103917776435541125e-17,
    -1.6475805939842632815e-17,
    5.300433771177335771e-18,
    -1.7331712005821000278e-18,
    5.7551092028827293794e-19,
    -1.939095605318355466e-19,
])

_CHEB_K1 = np.array([
    1.3603130952422213347,
    1.0392373657681723844e-1,
    -2.8578168596227793868e-3,
    1.9521551847135163111e-4,
    -1.93619797416608296e-5,
    2.4064849478372171171e-6,
    -3.5019606030878125421e-7,
    5.7410841254500492923e-8,
    -1.0345762465678097027e-8,
    2.0150497551970346161e-9,
    -4.1903547593419255842e-10,
    9.2183151876053141258e-11,
    -2.1299678384277910216e-11,
    5.1396396734823435404e-12,
    -1.2891739609498229352e-12,
    3.3484196660522431201e-13,
    -8.9767051820101460692e-14,
    2.4771544242195986813e-14,
    -7.0198370892147688513e-15,
    2.0387031662398608799e-15,
    -6.0570472706430178228e-16,
    1.8380935752430454256e-16,
    -5.6894628491936483743e-17,
    1.7940510478863572914e-17,
    -5.7567444820733024503e-18,
    1.8778651901623267401e-18,
    -6.2216452873526091852e-19,
    2.0919125269831136552e-19,
])

_NS = 16
_fact = np.cumprod(np.concatenate(([1.0], np.arange(1, _NS, dtype=np.float64))))
_harm = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, _NS))))
_kk = np.arange(_NS)
_C_I0 = 1.0 / _fact**2
_C_K0 = _harm / _fact**2
_C_I1 = 1.0 / (_fact * _fact * (_kk + 1))
# psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
_C_K1 = (-2 * EULER_GAMMA + 2 * _harm + 1.0 / (_kk + 1)) / (_fact * _fact * (_kk + 1))
_C_I0_LONG = 1.0 / np.cumprod(np.concatenate(([1.0], np.arange(1, 72, dtype=np.float64)))) ** 2


class BesselDomainError(ValueError):
    """Argument outside the supported domain."""


@dataclass(frozen=True)
class BesselEval:
    argument: float
    value: float
    scaled_value: float


@njit(cache=True)
def _horner(c, t):
    out = c[c.shape[0] - 1]
    for k in range(c.shape[0] - 2, -1, -1):
        out = out * t + c[k]
    return out


@njit(cache=True)
def _clenshaw(c, y):
    b1 = 0.0
    b2 = 0.0
    y2 = 2.0 * y
    for k in range(c.shape[0] - 1, 0, -1):
        b1, b2 = y2 * b1 - b2 + c[k], b1
    return y * b1 - b2 + c[0]


@njit(cache=True)
def k0_scaled_scalar(z):
    if z < 2.0:
        t = 0.25 * z * z
        k0 = -(np.log(0.5 * z) + EULER_GAMMA) * _horner(_C_I0, t) + _horner(_C_K0, t)
        return k0 * np.exp(z)
    return _clenshaw(_CHEB_K0, 4.0 / z - 1.0) / np.sqrt(z)


@njit(cache=True)
def k1_scaled_scalar(z):
    if z < 2.0:
        t = 0.25 * z * z
        i1 = 0.5 * z * _horner(_C_I1, t)
        k1 = 1.0 / z + np.log(0.5 * z) * i1 - 0.25 * z * _horner(_C_K1, t)
        return k1 * np.exp(z)
    return _clenshaw(_CHEB_K1, 4.0 / z - 1.0) / np.sqrt(z)


@njit(cache=True)
def k0_scalar(z):
    """K0 without argument checks; the caller guarantees z > 0."""
    if z < 2.0:
        t = 0.25 * z * z
        return -(np.log(0.5 * z) + EULER_GAMMA) * _horner(_C_I0, t) + _horner(_C_K0, t)
    if z > Z_UNDERFLOW:
        return 0.0
    return _clenshaw(_CHEB_K0, 4.0 / z - 1.0) / np.sqrt(z) * np.exp(-z)


@njit(cache=True)
def k1_scalar(z):
    if z < 2.0:
        t = 0.25 * z * z
        i1 = 0.5 * z * _horner(_C_I1, t)
        return 1.0 / z + np.log(0.5 * z) * i1 - 0.25 * z * _horner(_C_K1, t)
    if z > Z_UNDERFLOW:
        return 0.0
    return _clenshaw(_CHEB_K1, 4.0 / z - 1.0) / np.sqrt(z) * np.exp(-z)


@njit(cache=True)
def i0_scalar(z):
    return _horner(_C_I0_LONG, 0.25 * z * z)


@vectorize(["float64(float64)"], cache=True)
def _k0_ufunc(z):
    return k0_scalar(z)


@vectorize(["float64(float64)"], cache=True)
def _k1_ufunc(z):
    return k1_scalar(z)


@vectorize(["float64(float64)"], cache=True)
def _k0e_ufunc(z):
    return k0_scaled_scalar(z)


@vectorize(["float64(float64)"], cache=True)
def _k1e_ufunc(z):
    return k1_scaled_scalar(z)


@vectorize(["float64(float64)"], cache=True)
def _i0_ufunc(z):
    return i0_scalar(z)


def _positive(z):
    z = np.asarray(z, dtype=float)
    if not (np.all(np.isfinite(z)) and np.all(z > 0)):
        raise BesselDomainError("argument must be positive and finite")
    return z


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def bessel_k0(z):
    """K0(z), z > 0.  Exactly 0 above z = 600."""
    return _out(_k0_ufunc(_positive(z)))


def bessel_k1(z):
    """K1(z), z > 0.  Exactly 0 above z = 600."""
    return _out(_k1_ufunc(_positive(z)))


def bessel_k0e(z):
    """exp(z) K0(z); finite for every z > 0."""
    return _out(_k0e_ufunc(_positive(z)))


def bessel_k1e(z):
    """exp(z) K1(z); finite for every z > 0."""
    return _out(_k1e_ufunc(_positive(z)))


def bessel_i0(z):
    """I0(z) by its power series, on 0 <= z <= 30 only."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)) or np.any(z < 0) or np.any(z > 30.0):
        raise BesselDomainError("bessel_i0 is only provided on [0, 30]")
    return _out(_i0_ufunc(z))


def k0_eval(z: float) -> BesselEval:
    return BesselEval(float(z), bessel_k0(float(z)), bessel_k0e(float(z)))


def k1_eval(z: float) -> BesselEval:
    return BesselEval(float(z), bessel_k1(float(z)), bessel_k1e(float(z)))
