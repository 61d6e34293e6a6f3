"""Dimensionless propagators of the scalar Dirichlet problem.

Surface-surface kernel ``m11``, surface-sphere kernel ``m12`` (``= m21``) at
momentum ``q`` in units of the separation, and the monopole inverse sphere
propagator.  Products ``q * chord >= KERNEL_CUTOFF`` are set to exactly 0.
"""
from __future__ import annotations

import math

import numpy as np

from .profiles import DimensionlessProfile
from .specfun import bessel_k0

KERNEL_CUTOFF = 600.0
_INV_2PI = 1.0 / (2.0 * math.pi)


class GeometryError(ValueError):
    """Coincident points, or a surface touching the sphere centre."""


def surface_chord(p: DimensionlessProfile, x, xp):
    """Euclidean distance between the surface points above ``x`` and ``xp``."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    return np.hypot(xp - x, p.height(xp) - p.height(x))


def sphere_chord(p: DimensionlessProfile, xp):
    """Distance from the surface point above ``xp`` to the sphere centre (0, 1)."""
    xp = np.asarray(xp, dtype=float)
    return np.hypot(xp, p.height(xp) - 1.0)


def _k0_cut(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    live = u < KERNEL_CUTOFF
    if np.any(live):
        out[live] = bessel_k0(u[live])
    return out if out.ndim else float(out)


def _check_q(q):
    if not (math.isfinite(q) and q > 0):
        raise ValueError(f"q must be positive and finite, got {q}")


def m11(q: float, x, xp, p: DimensionlessProfile):
    """``K0(q * chord) / 2pi`` between two distinct surface points."""
    _check_q(q)
    d = surface_chord(p, x, xp)
    if np.any(d == 0):
        raise GeometryError("m11 evaluated at coincident surface points")
    return _k0_cut(q * d) * _INV_2PI


def m12(q: float, xp, p: DimensionlessProfile):
    """``K0(q * |surface point - sphere centre|) / 2pi``."""
    _check_q(q)
    d = sphere_chord(p, xp)
    if np.any(d == 0):
        raise GeometryError("surface touches the sphere centre")
    return _k0_cut(q * d) * _INV_2PI


m21 = m12


def m22_inv_monopole(zeta: float, r: float) -> float:
    """Monopole part of the inverse sphere propagator,
    ``|zeta| e^{r|zeta|} / (4 pi r^2 sinh(r|zeta|))``.

    At ``zeta = 0`` the continuous limit ``1/(4 pi r^3)`` is returned.
    """
    if not (math.isfinite(r) and r > 0):
        raise ValueError(f"sphere radius must be positive, got {r}")
    u = r * abs(zeta)
    if u == 0:
        return 1.0 / (4 * math.pi * r**3)
    # e^u / sinh(u) = 2 / (1 - e^{-2u}), stable for large u
    ratio = 2.0 / -math.expm1(-2.0 * u)
    return abs(zeta) * ratio / (4 * math.pi * r**2)
