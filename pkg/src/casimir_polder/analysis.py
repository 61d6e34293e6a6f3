"""Sweeps over the separation and extraction of scaling exponents.

All sweeps are in units of the corrugation amplitude: ``A = 1`` so that
``H`` equals ``H/A`` and ``omega`` equals ``omega*A``.  The exponent ``eta``
is defined through ``E_corrugation ~ 1/H^(2 + eta)``; since the planar
coefficient is constant this is ``eta = -d ln(ratio) / d ln H``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .energy import NumericalSettings, energy_ratio
from .kernels import GeometryError
from .profiles import HeightProfile, ProfileError, ProfileKind, reduce
from .solver import ResolutionError, SolverError

# a = A/H above this is outside the validated resolution range
MAX_RELATIVE_AMPLITUDE = 20.0


class InsufficientDataError(ValueError):
    """Too few usable records for the requested fit."""


@dataclass(frozen=True)
class SweepRecord:
    H_over_A: float
    omega_A: float
    phase: float
    c_E: float = math.nan
    c_E_planar: float = math.nan
    ratio: float = math.nan
    eta_local: float = math.nan
    n_nodes: int = 0
    settings: dict = field(default_factory=dict, compare=False)
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok" and math.isfinite(self.ratio)


@dataclass(frozen=True)
class EtaEstimate:
    """Exponent from a least-squares slope in log-log coordinates.

    ``stderr`` is the standard error of the slope (NaN for an exact two-point
    fit).  ``eta_direct`` repeats the fit on the unnormalised energy
    ``c_E / H^2`` as ``-2 - d ln E / d ln H``; NaN when not applicable.
    """

    H_over_A: float
    eta: float
    half_width: float
    residual: float
    n_points: int
    stderr: float = math.nan
    eta_direct: float = math.nan


@dataclass(frozen=True)
class RiseFit:
    """Small-separation behaviour ``ratio - 1 ~ c (H/A)^(-eta)``.

    ``coefficient`` is the slope ``c`` of ``ratio - 1 = c H/A`` fitted on the
    same records.
    """

    H_over_A: float
    eta: float
    coefficient: float
    residual: float
    H_range: tuple[float, float]
    n_points: int
    stderr: float = math.nan


@dataclass(frozen=True)
class TailResult:
    estimates: dict
    spread: float
    mean: float


def sweep(
    omega_A: float,
    phase: float,
    H_over_A_values: Sequence[float],
    settings: NumericalSettings | None = None,
    *,
    kind: ProfileKind | str = ProfileKind.SINE,
    reference: str = "local",
    progress: Callable[[SweepRecord], None] | None = None,
) -> list[SweepRecord]:
    """Energy ratio at each ``H/A``; node counts are raised to the resolution
    floor at every point.  Failures become records with ``error`` set."""
    hs = [float(v) for v in H_over_A_values]
    if not hs:
        raise ValueError("empty H/A list")
    if any(not (math.isfinite(v) and v > 0) for v in hs):
        raise ValueError("all H/A values must be positive and finite")
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise ValueError("H/A values must be strictly increasing")
    if not (math.isfinite(omega_A) and omega_A > 0):
        raise ValueError(f"omega_A must be positive, got {omega_A}")
    kind = ProfileKind(kind)
    profile = HeightProfile(kind, amplitude=0.0 if kind is ProfileKind.FLAT else 1.0,
                            omega=omega_A, phase=phase, reference=reference)
    return sweep_profile(profile, hs, settings, omega_A=omega_A, phase=phase, progress=progress)


def sweep_profile(
    profile: HeightProfile,
    H_values: Sequence[float],
    settings: NumericalSettings | None = None,
    *,
    omega_A: float = math.nan,
    phase: float = math.nan,
    progress: Callable[[SweepRecord], None] | None = None,
) -> list[SweepRecord]:
    """Energy ratio of ``profile`` at separations ``H_values`` (same length
    unit as the profile); records store ``H / amplitude`` when the amplitude
    is nonzero."""
    hs = [float(v) for v in H_values]
    if not hs:
        raise ValueError("empty separation list")
    if any(not (math.isfinite(v) and v > 0) for v in hs):
        raise ValueError("all separations must be positive and finite")
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise ValueError("separations must be strictly increasing")
    settings = settings or NumericalSettings()
    amp = profile.amplitude if profile.amplitude > 0 else 1.0
    out = []
    for H in hs:
        base = SweepRecord(H / amp, omega_A, phase, settings=settings.snapshot())
        p = reduce(profile, H)
        if not p.is_flat and profile.kind is not ProfileKind.TABULATED and amp / H > MAX_RELATIVE_AMPLITUDE:
            rec = replace(base, status="out_of_range",
                          error=f"A/H = {amp / H:.3g} exceeds {MAX_RELATIVE_AMPLITUDE}: outside validated resolution")
        else:
            try:
                res = energy_ratio(p, settings, autoscale=True)
                rec = replace(base, c_E=res.c_E, c_E_planar=res.c_E_planar, ratio=res.ratio,
                              n_nodes=res.settings["n_nodes_used"])
            except (SolverError, GeometryError, ResolutionError, ProfileError, ArithmeticError) as exc:
                rec = replace(base, status="failed", error=f"{type(exc).__name__}: {exc}")
        out.append(rec)
        if progress is not None:
            progress(rec)
    return out


def _loglog_fit(H, y):
    """Slope, rms residual and slope standard error of ``ln y`` against ``ln H``."""
    lx, ly = np.log(H), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    n = lx.size
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / (n - 2) / sxx) if n > 2 and sxx > 0 else math.nan
    return float(coef[0]), float(np.sqrt(np.mean(resid**2))), stderr


def _usable(records, excess=False):
    rec = [r for r in records if r.ok and (not excess or r.ratio > 1.0)]
    H = np.array([r.H_over_A for r in rec])
    y = np.array([r.ratio - 1.0 if excess else r.ratio for r in rec])
    E = np.array([r.c_E / r.H_over_A**2 for r in rec])
    return H, y, E


def _select(H, centre, half_width):
    sel = np.abs(np.log(H) - math.log(centre)) <= half_width * (1 + 1e-9)
    if sel.sum() < 3:
        raise InsufficientDataError(
            f"fewer than 3 records within {half_width} of ln(H/A) = {math.log(centre):.3g}"
        )
    return sel


def _window_fit(H, y, centre, half_width, E=None):
    sel = _select(H, centre, half_width)
    slope, res, err = _loglog_fit(H[sel], y[sel])
    direct = math.nan
    if E is not None and np.all(E[sel] > 0):
        direct = -2.0 - _loglog_fit(H[sel], E[sel])[0]
    return EtaEstimate(float(centre), -slope, float(half_width), res, int(sel.sum()), err, direct)


def anomalous_dimension(records: Sequence[SweepRecord], window: float = 0.15) -> list[EtaEstimate]:
    """Local ``eta = -d ln(ratio)/d ln H`` at every record whose window of
    half-width ``window`` in ``ln H`` holds at least 3 records."""
    if not window > 0:
        raise ValueError("window must be positive")
    H, y, E = _usable(records)
    if H.size < 3:
        raise InsufficientDataError("need at least 3 valid records")
    out = []
    for h in H:
        try:
            out.append(_window_fit(H, y, h, window, E))
        except InsufficientDataError:
            continue
    if not out:
        raise InsufficientDataError(f"no window of half-width {window} holds 3 records")
    return out


def with_local_eta(records: Sequence[SweepRecord], window: float = 0.15) -> list[SweepRecord]:
    """Copy of ``records`` with ``eta_local`` filled where a fit is possible."""
    try:
        est = {e.H_over_A: e.eta for e in anomalous_dimension(records, window)}
    except InsufficientDataError:
        est = {}
    return [replace(r, eta_local=est.get(r.H_over_A, math.nan)) for r in records]


def peak(records: Sequence[SweepRecord]) -> SweepRecord:
    ok = [r for r in records if r.ok]
    if not ok:
        raise InsufficientDataError("no valid records")
    return max(ok, key=lambda r: r.ratio)


def drop_off_exponent(records: Sequence[SweepRecord], window: float = 0.15) -> EtaEstimate:
    """Steepest decay beyond the ratio maximum: the largest local ``eta``
    among windows centred above the peak."""
    top = peak(records)
    beyond = [e for e in anomalous_dimension(records, window) if e.H_over_A > top.H_over_A]
    if not beyond:
        raise InsufficientDataError("no fit window beyond the peak")
    return max(beyond, key=lambda e: e.eta)


def rise_exponent(records: Sequence[SweepRecord], window: float = 0.15) -> RiseFit:
    """Small-separation exponent of the excess ``ratio - 1``.

    Fits ``ln(ratio - 1)`` against ``ln H`` in the first window (smallest
    centre) that holds 3 records before the peak, which is the closest the
    data get to the ``H -> 0`` limit.
    """
    top = peak(records)
    H, y, _ = _usable([r for r in records if r.ok and r.H_over_A < top.H_over_A], excess=True)
    for centre in H:
        try:
            sel = _select(H, centre, window)
        except InsufficientDataError:
            continue
        slope, res, err = _loglog_fit(H[sel], y[sel])
        hs, ys = H[sel], y[sel]
        coefficient = float(np.dot(hs, ys) / np.dot(hs, hs))
        return RiseFit(float(centre), -slope, coefficient, res, (float(hs.min()), float(hs.max())),
                       int(sel.sum()), err)
    raise InsufficientDataError("no window before the peak holds 3 records with ratio > 1")


def universal_tail(
    curves: Mapping[float, Sequence[SweepRecord]], H_over_A_probe: float = 10.0, window: float = 0.15
) -> TailResult:
    """Local ``eta`` near the probe separation for each curve and their spread.

    Each fit window is centred at the record closest to the probe in ``ln H``.
    """
    est = {}
    for key, recs in curves.items():
        H, y, E = _usable(recs)
        if H.size == 0 or not (H.min() < H_over_A_probe < H.max()):
            raise InsufficientDataError(f"curve {key} does not bracket H/A = {H_over_A_probe}")
        centre = H[np.argmin(np.abs(np.log(H / H_over_A_probe)))]
        est[key] = _window_fit(H, y, centre, window, E)
    etas = [e.eta for e in est.values()]
    return TailResult(est, float(max(etas) - min(etas)), float(np.mean(etas)))


def log_spaced(lo: float, hi: float, step: float) -> list[float]:
    """Values from ``lo`` to ``hi`` equally spaced in ``ln`` with spacing ``<= step``."""
    n = max(1, math.ceil(math.log(hi / lo) / step))
    return [float(v) for v in np.exp(np.linspace(math.log(lo), math.log(hi), n + 1))]


def records_by_omega(records: Iterable[SweepRecord]) -> dict:
    out: dict = {}
    for r in records:
        out.setdefault(r.omega_A, []).append(r)
    return out
