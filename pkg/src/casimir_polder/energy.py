"""Momentum quadrature of the energy coefficient and the planar-normalised ratio.

The energy is ``E = -(hbar c r / H^2) c_E`` with

    c_E = int_0^inf dq  q int dx sqrt(g) delta(q; x) m12(q; x),

where ``delta`` solves the surface equation at momentum ``q``.  The planar
value is ``1/(8 pi)``; ratios always use a planar run on the same node
layout and momentum rule.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .profiles import DimensionlessProfile, ProfileKind
from .solver import (
    LineGrid,
    assemble,
    build_grid,
    grid_from_breaks,
    resolution_floor,
    restrict_grid,
    solve_delta_m12,
)

PLANAR_COEFFICIENT = 1.0 / (8.0 * math.pi)
# graded momentum rule: segment boundaries (q_max appended) and the share of
# nodes per segment for the 96-node default
Q_BREAKS = (0.0, 0.003, 0.03, 0.15, 0.42, 1.0, 2.5, 6.0, 12.0)
Q_COUNTS = (4, 5, 6, 8, 12, 16, 16, 16, 13)


@dataclass(frozen=True)
class NumericalSettings:
    """Resolution knobs shared by the solver and the momentum quadrature.

    ``half_width`` is the truncation ``L`` and ``n_nodes`` the node count on
    ``[-L, L]``.  With ``shrink`` set, momentum ``q`` only uses the panels
    covering ``|x| <= max(min_half_width, shrink / q)``; the kernels decay
    like ``exp(-q |x|)`` so the discarded strip is far below tolerance.
    """

    half_width: float = 24.0
    n_nodes: int = 1200
    nodes_per_wavelength: int = 24
    panel_order: int = 24
    kink_levels: int = 2
    q_max: float = 30.0
    q_nodes: int = 96
    shrink: float | None = 10.0
    min_half_width: float = 4.0
    threads: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.n_nodes < 1 or self.nodes_per_wavelength < 1 or self.panel_order < 2:
            raise ValueError("node counts must be positive")
        if not (math.isfinite(self.q_max) and self.q_max > Q_BREAKS[-1]):
            raise ValueError(f"q_max must exceed {Q_BREAKS[-1]}, got {self.q_max}")
        if self.q_nodes < 2 * len(Q_COUNTS):
            raise ValueError(f"q_nodes must be at least {2 * len(Q_COUNTS)}, got {self.q_nodes}")
        if self.shrink is not None and not self.shrink > 0:
            raise ValueError("shrink must be positive or None")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def snapshot(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d

    def nodes_for(self, p: DimensionlessProfile) -> int:
        """``n_nodes`` raised to the resolution floor of ``p``."""
        return max(self.n_nodes, resolution_floor(p, self.half_width, self.nodes_per_wavelength))

    def grid(self, p: DimensionlessProfile, *, autoscale: bool = False) -> LineGrid:
        n = self.nodes_for(p) if autoscale else self.n_nodes
        return build_grid(
            p,
            self.half_width,
            n,
            nodes_per_wavelength=self.nodes_per_wavelength,
            order=self.panel_order,
            kink_levels=self.kink_levels,
        )

    def momentum_grid(self) -> "MomentumGrid":
        return MomentumGrid.graded(self.q_max, self.q_nodes)

    def local_half_width(self, q: float) -> float:
        if self.shrink is None:
            return self.half_width
        return min(self.half_width, max(self.min_half_width, self.shrink / q))


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Composite Gauss-Legendre rule on ``[0, q_max]``, graded towards 0 where
    the integrand behaves like ``q ln q``."""

    nodes: np.ndarray
    weights: np.ndarray
    q_max: float
    breaks: tuple = ()
    counts: tuple = ()

    @classmethod
    def graded(cls, q_max: float = 30.0, n_nodes: int = 96) -> "MomentumGrid":
        """Gauss-Legendre on each segment of ``Q_BREAKS + (q_max,)`` with
        node counts proportional to ``Q_COUNTS`` and summing to ``n_nodes``."""
        breaks = Q_BREAKS + (float(q_max),)
        if not q_max > Q_BREAKS[-1]:
            raise ValueError(f"q_max must exceed {Q_BREAKS[-1]}")
        if n_nodes < 2 * len(Q_COUNTS):
            raise ValueError(f"too few momentum nodes: {n_nodes}")
        counts = [max(2, round(c * n_nodes / sum(Q_COUNTS))) for c in Q_COUNTS]
        # settle rounding on the largest segments, keeping at least 2 nodes each
        while sum(counts) != n_nodes:
            step = 1 if sum(counts) < n_nodes else -1
            k = max(range(len(counts)), key=lambda i: (counts[i], i))
            counts[k] += step
        nodes, weights = [], []
        for a, b, m in zip(breaks[:-1], breaks[1:], counts):
            s, w = np.polynomial.legendre.leggauss(m)
            nodes.append(0.5 * (a + b) + 0.5 * (b - a) * s)
            weights.append(0.5 * (b - a) * w)
        return cls(np.concatenate(nodes), np.concatenate(weights), float(q_max), breaks, tuple(counts))

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True, eq=False)
class EnergyResult:
    c_E: float
    c_E_planar: float | None = None
    ratio: float | None = None
    settings: dict = field(default_factory=dict)
    q_nodes: np.ndarray | None = None
    integrand: np.ndarray | None = None
    integrand_planar: np.ndarray | None = None


def q_integrand(q: float, grid: LineGrid, p: DimensionlessProfile | None = None) -> float:
    """``q * sum_i w_i sqrt(g_i) delta_i m12_i`` on ``grid``."""
    system = solve_delta_m12(assemble(q, grid, p, fold=grid.symmetric))
    # rhs is m12 at the unknowns; folded unknowns carry their mirror's weight
    wg = grid.w * grid.sqrt_g
    if system.folded:
        wg = 2.0 * wg[grid.n_nodes // 2 :]
    val = q * float(np.dot(wg * system.solution, system.rhs))
    # an exact zero is legitimate when rhs^2 underflows (rhs below ~1e-154)
    if not (val > 0 or (val == 0.0 and np.max(np.abs(system.rhs)) < 1e-150)):
        raise ArithmeticError(f"non-positive integrand {val} at q={q}")
    return val


def _integrand_values(grid, qgrid, settings):
    def one(q):
        g = grid if settings is None else restrict_grid(grid, settings.local_half_width(q))
        return q_integrand(q, g)

    threads = 1 if settings is None else settings.threads
    if threads == 1:
        vals = [one(q) for q in qgrid.nodes]
    else:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(one, qgrid.nodes))
    return np.array(vals)


def energy_coefficient(
    p: DimensionlessProfile,
    grid: LineGrid,
    qgrid: MomentumGrid,
    settings: NumericalSettings | None = None,
) -> EnergyResult:
    """``c_E = sum_k v_k f(q_k)``.  Without ``settings`` every momentum uses the full grid."""
    if grid.profile is not p and grid.profile != p:
        raise ValueError("grid was built for a different profile")
    vals = _integrand_values(grid, qgrid, settings)
    # fixed-order reduction, independent of scheduling
    c = math.fsum(qgrid.weights * vals)
    snap = settings.snapshot() if settings is not None else {}
    return EnergyResult(c_E=c, settings=snap, q_nodes=qgrid.nodes, integrand=vals)


_planar_cache: dict = {}


def planar_reference(grid: LineGrid, qgrid: MomentumGrid, settings: NumericalSettings) -> EnergyResult:
    """Flat-profile run on exactly the node layout of ``grid``."""
    key = (grid.layout_key(), qgrid.nodes.tobytes(), tuple(sorted(settings.snapshot().items())))
    hit = _planar_cache.get(key)
    if hit is None:
        flat = DimensionlessProfile(ProfileKind.FLAT, 0.0, 1.0, 0.0)
        fgrid = grid_from_breaks(flat, grid.breaks, grid.order,
                                 cell_panels=grid.cell_panels, period=grid.period)
        hit = energy_coefficient(flat, fgrid, qgrid, settings)
        if len(_planar_cache) > 64:
            _planar_cache.clear()
        _planar_cache[key] = hit
    return hit


def energy_ratio(
    p: DimensionlessProfile, settings: NumericalSettings | None = None, *, autoscale: bool = False
) -> EnergyResult:
    """``c_E / c_E_planar`` with both evaluated on identical settings and layout."""
    settings = settings or NumericalSettings()
    grid = settings.grid(p, autoscale=autoscale)
    qgrid = settings.momentum_grid()
    res = energy_coefficient(p, grid, qgrid, settings)
    if p.is_flat:
        ref = res
    else:
        ref = planar_reference(grid, qgrid, settings)
    snap = dict(res.settings, n_nodes_used=grid.n_nodes)
    return EnergyResult(
        c_E=res.c_E,
        c_E_planar=ref.c_E,
        ratio=res.c_E / ref.c_E,
        settings=snap,
        q_nodes=qgrid.nodes,
        integrand=res.integrand,
        integrand_planar=ref.integrand,
    )
