"""Corrugation height profiles and the induced surface metric factor.

A :class:`HeightProfile` lives in physical units (amplitude ``A``, angular
frequency ``omega``).  :func:`reduce` rescales it by the sphere separation
``H`` into a :class:`DimensionlessProfile`, which is what the kernels, the
solver and the energy quadrature consume.

Two vertical conventions are supported through ``reference``:

``"mean"``
    heights are used as given, ``h(x) = A sin(omega x + phi)``; the sphere
    centre sits a distance ``H`` above the line ``h = 0``.
``"local"``
    heights are measured from the surface point directly beneath the
    sphere, ``h(x) - h(0)``, so ``H`` is the sphere-to-surface distance
    along the vertical through the sphere centre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator

REFERENCES = ("mean", "local")


class ProfileKind(str, Enum):
    FLAT = "flat"
    SINE = "sine"
    SAWTOOTH = "sawtooth"
    TABULATED = "tabulated"


class ProfileError(ValueError):
    """Invalid profile parameters or evaluation outside the profile's domain."""


@dataclass(frozen=True)
class HeightProfile:
    """Uniaxial corrugation ``h(x)`` in physical units.

    ``samples`` is only used by the tabulated kind: a sequence of ``(x, h)``
    pairs with strictly increasing ``x``.
    """

    kind: ProfileKind = ProfileKind.FLAT
    amplitude: float = 0.0
    omega: float = 1.0
    phase: float = 0.0
    samples: tuple[tuple[float, float], ...] | None = None
    reference: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.reference not in REFERENCES:
            raise ProfileError(f"reference must be one of {REFERENCES}, got {self.reference!r}")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise ProfileError(f"amplitude must be finite and >= 0, got {self.amplitude}")
        if not math.isfinite(self.phase):
            raise ProfileError("phase must be finite")
        if self.kind in (ProfileKind.SINE, ProfileKind.SAWTOOTH):
            if not (math.isfinite(self.omega) and self.omega > 0):
                raise ProfileError(f"omega must be > 0 for periodic profiles, got {self.omega}")
        if self.kind is ProfileKind.TABULATED:
            if self.samples is None or len(self.samples) < 2:
                raise ProfileError("tabulated profile needs at least two (x, h) samples")
            xs = np.array([s[0] for s in self.samples], dtype=float)
            hs = np.array([s[1] for s in self.samples], dtype=float)
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(hs))):
                raise ProfileError("tabulated samples must be finite")
            if np.any(np.diff(xs) <= 0):
                raise ProfileError("tabulated samples must be strictly increasing in x")
            object.__setattr__(self, "samples", tuple(zip(xs.tolist(), hs.tolist())))

    @classmethod
    def flat(cls, reference: str = "mean") -> "HeightProfile":
        return cls(ProfileKind.FLAT, reference=reference)

    @classmethod
    def sine(cls, amplitude: float, omega: float, phase: float = 0.0, reference: str = "mean"):
        return cls(ProfileKind.SINE, amplitude, omega, phase, reference=reference)

    @classmethod
    def sawtooth(cls, amplitude: float, omega: float, phase: float = 0.0, reference: str = "mean"):
        return cls(ProfileKind.SAWTOOTH, amplitude, omega, phase, reference=reference)

    @classmethod
    def tabulated(cls, samples, reference: str = "mean") -> "HeightProfile":
        return cls(ProfileKind.TABULATED, samples=tuple(map(tuple, samples)), reference=reference)


def _triangle(theta):
    """Unit triangle wave with the phase convention of ``sin``: peaks at pi/2."""
    u = np.mod(np.asarray(theta, dtype=float) + 0.5 * np.pi, 2 * np.pi)
    return np.where(u <= np.pi, -1.0 + 2.0 * u / np.pi, 3.0 - 2.0 * u / np.pi)


def _triangle_slope(theta):
    # left-sided derivative at the kinks: rising segments are (trough, peak]
    u = np.mod(np.asarray(theta, dtype=float) + 0.5 * np.pi, 2 * np.pi)
    rising = (u > 0) & (u <= np.pi)
    return np.where(rising, 2.0 / np.pi, -2.0 / np.pi)


@dataclass(frozen=True)
class DimensionlessProfile:
    """Profile in units of the separation: ``h~(x~) = h(x~ H) / H``.

    ``a = A/H`` and ``nu = omega*H``; for the sine kind the slope amplitude
    ``a*nu`` equals ``omega*A``.  For the tabulated kind ``samples`` holds the
    rescaled ``(x/H, h/H)`` table.
    """

    kind: ProfileKind
    a: float
    nu: float
    phase: float
    reference: str = "mean"
    samples: tuple[tuple[float, float], ...] | None = None
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind is ProfileKind.TABULATED and self._interp is None:
            xs = np.array([s[0] for s in self.samples])
            hs = np.array([s[1] for s in self.samples])
            object.__setattr__(self, "_interp", PchipInterpolator(xs, hs, extrapolate=False))
        object.__setattr__(self, "_offset", 0.0)
        if self.reference == "local":
            object.__setattr__(self, "_offset", float(self._raw_height(np.array(0.0))))

    # raw parametric forms, before the vertical reference shift
    def _raw_height(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is ProfileKind.FLAT:
            return np.zeros_like(x)
        if self.kind is ProfileKind.SINE:
            return self.a * np.sin(self.nu * x + self.phase)
        if self.kind is ProfileKind.SAWTOOTH:
            return self.a * _triangle(self.nu * x + self.phase)
        self._check_range(x)
        return self._interp(x)

    def _check_range(self, x):
        lo, hi = self.samples[0][0], self.samples[-1][0]
        if np.any(x < lo) or np.any(x > hi):
            raise ProfileError(f"tabulated profile evaluated outside its sample range [{lo}, {hi}]")

    def height(self, x):
        return self._raw_height(x) - self._offset

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is ProfileKind.FLAT:
            return np.zeros_like(x)
        if self.kind is ProfileKind.SINE:
            return self.a * self.nu * np.cos(self.nu * x + self.phase)
        if self.kind is ProfileKind.SAWTOOTH:
            return self.a * self.nu * _triangle_slope(self.nu * x + self.phase)
        self._check_range(x)
        return self._interp.derivative()(x)

    def metric_factor(self, x):
        return np.sqrt(1.0 + self.slope(x) ** 2)

    @property
    def is_flat(self) -> bool:
        return self.kind is ProfileKind.FLAT or (
            self.kind in (ProfileKind.SINE, ProfileKind.SAWTOOTH) and self.a == 0.0
        )

    @property
    def is_periodic(self) -> bool:
        return self.kind in (ProfileKind.SINE, ProfileKind.SAWTOOTH) and not self.is_flat

    @property
    def wavelength(self) -> float | None:
        return 2 * math.pi / self.nu if self.is_periodic else None

    @property
    def is_even(self) -> bool:
        """True when ``h(-x) == h(x)``: flat, or a periodic profile with an
        extremum at the origin."""
        if self.is_flat:
            return True
        if self.is_periodic:
            return abs(math.cos(self.phase)) < 1e-12
        return False

    def kinks(self, lo: float, hi: float) -> np.ndarray:
        """Slope discontinuities in ``[lo, hi]`` (sawtooth only)."""
        if self.kind is not ProfileKind.SAWTOOTH or self.is_flat:
            return np.empty(0)
        # kinks where nu*x + phase = pi/2 + k*pi
        kmin = math.ceil((self.nu * lo + self.phase - 0.5 * math.pi) / math.pi)
        kmax = math.floor((self.nu * hi + self.phase - 0.5 * math.pi) / math.pi)
        k = np.arange(kmin, kmax + 1)
        return (0.5 * math.pi + k * math.pi - self.phase) / self.nu

    def max_height(self) -> float:
        """Upper bound of ``h~`` over the whole line (tabulated: over samples)."""
        if self.kind is ProfileKind.TABULATED:
            return max(s[1] for s in self.samples) - self._offset
        return self.a - self._offset


def reduce(profile: HeightProfile, H: float) -> DimensionlessProfile:
    """Rescale lengths by the separation ``H``."""
    if not (math.isfinite(H) and H > 0):
        raise ProfileError(f"separation H must be positive, got {H}")
    samples = None
    if profile.kind is ProfileKind.TABULATED:
        samples = tuple((x / H, h / H) for x, h in profile.samples)
    return DimensionlessProfile(
        kind=profile.kind,
        a=profile.amplitude / H,
        nu=profile.omega * H,
        phase=profile.phase,
        reference=profile.reference,
        samples=samples,
    )


def height(p: DimensionlessProfile, x):
    return p.height(x)


def metric_factor(p: DimensionlessProfile, x):
    """``sqrt(1 + (dh~/dx~)^2)``."""
    return p.metric_factor(x)
