"""Nyström solution of the surface equation for the combined propagator.

For fixed momentum ``q`` we solve

    int dx sqrt(g(x)) m11(q; x', x) delta(x) = m12(q; x')

on the truncated line ``[-L, L]``.  The unknown is represented by its values
on composite Gauss-Legendre panels.  Far entries use the plain panel rule;
for a target within ``NEAR_RADIUS`` half-lengths of a panel the kernel is
split as

    K0(q d) = -ln|x - x_i| I0(q d) + R(x_i, x),

with ``R`` smooth.  The logarithm is integrated exactly against the panel's
Lagrange basis (``panels.log_weights``); ``I0(q d) sqrt(g) delta`` and ``R``
are sampled at the nodes.  When ``q d`` on the panel exceeds
``SPLIT_LIMIT`` the ``I0`` factor is dropped (the kernel there is
exponentially small, so only stability matters).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy import integrate, linalg
from scipy.linalg import lapack

from .kernels import KERNEL_CUTOFF, GeometryError
from .panels import gauss_legendre, log_weights
from .profiles import DimensionlessProfile, ProfileKind
from .specfun import EULER_GAMMA, i0_scalar, k0_scalar

PANEL_ORDER = 24
NEAR_RADIUS = 2.5
SPLIT_LIMIT = 12.0
RESIDUAL_TOL = 1e-8
MIN_NODES = 16
MIN_CLEARANCE = 1e-2
# period-aligned panels once the half-width holds this many wavelengths
CELL_MIN_PERIODS = 4
ORACLE_KMAX = 60.0


class ResolutionError(ValueError):
    """Requested node count below the floor for the profile."""


class SolverError(RuntimeError):
    def __init__(self, message, q=None, n_nodes=None, half_width=None):
        super().__init__(f"{message} (q={q}, N={n_nodes}, L={half_width})")
        self.q = q
        self.n_nodes = n_nodes
        self.half_width = half_width


@dataclass(frozen=True, eq=False)
class LineGrid:
    """Discretised surface coordinate with cached profile samples.

    ``cell_panels`` is set when the layout repeats with ``period``: panel
    ``k`` is then a translate of panel ``k mod cell_panels`` and the far-field
    kernel only depends on the cell offset, which ``assemble`` exploits.
    """

    profile: DimensionlessProfile
    half_width: float
    breaks: np.ndarray
    order: int
    x: np.ndarray
    w: np.ndarray
    h: np.ndarray
    slope: np.ndarray
    sqrt_g: np.ndarray
    symmetric: bool
    near_rows: np.ndarray = field(repr=False)
    near_panels: np.ndarray = field(repr=False)
    near_weights: np.ndarray = field(repr=False)
    cell_panels: int | None = None
    period: float | None = None

    @property
    def n_nodes(self) -> int:
        return self.x.size

    @property
    def n_panels(self) -> int:
        return self.breaks.size - 1

    @property
    def n_cells(self) -> int | None:
        return None if self.cell_panels is None else self.n_panels // self.cell_panels

    def layout_key(self) -> tuple:
        """Hashable description of the node layout (profile excluded)."""
        return (self.order, self.breaks.tobytes(), self.cell_panels, self.period)

    def interpolate(self, values, x) -> np.ndarray:
        """Panel-wise polynomial interpolant of nodal ``values`` at points ``x``."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.x.shape:
            raise ValueError(f"expected {self.x.size} nodal values, got shape {values.shape}")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.breaks[0]) or np.any(x > self.breaks[-1]):
            raise ValueError("interpolation point outside the grid")
        k = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.n_panels - 1)
        s, _ = gauss_legendre(self.order)
        # barycentric weights of the Gauss-Legendre nodes
        bw = 1.0 / np.prod(s[:, None] - s[None, :] + np.eye(s.size), axis=1)
        out = np.empty(x.size)
        for i, (xi, ki) in enumerate(zip(x, k)):
            a, b = self.breaks[ki], self.breaks[ki + 1]
            t = (2.0 * xi - a - b) / (b - a)
            f = values[ki * self.order : (ki + 1) * self.order]
            d = t - s
            hit = np.flatnonzero(d == 0.0)
            if hit.size:
                out[i] = f[hit[0]]
            else:
                c = bw / d
                out[i] = np.dot(c, f) / c.sum()
        return out


def resolution_floor(p: DimensionlessProfile, L: float, nodes_per_wavelength: int) -> int:
    """Smallest node count satisfying the nodes-per-wavelength rule on ``[-L, L]``."""
    if not p.is_periodic:
        return MIN_NODES
    return max(MIN_NODES, math.ceil(nodes_per_wavelength * 2 * L / p.wavelength))


def _refine(pts, ell, levels, sharp):
    """Breaks on ``pts`` with pieces no longer than ``ell``; ``sharp[k]`` marks
    points that get ``levels`` dyadic refinements on both sides."""
    out = [pts[0]]
    for k in range(len(pts) - 1):
        a, b = pts[k], pts[k + 1]
        m = max(1, math.ceil((b - a) / ell - 1e-9))
        seg = list(np.linspace(a, b, m + 1)[1:-1])
        first = seg[0] if seg else b
        last = seg[-1] if seg else a
        if sharp[k]:
            seg += [a + (first - a) * 0.5**j for j in range(1, levels + 1)]
        if sharp[k + 1]:
            seg += [b - (b - last) * 0.5**j for j in range(1, levels + 1)]
        out += sorted(set(seg)) + [b]
    return np.array(out)


def _mirror(pos):
    pos = np.asarray(pos, dtype=float)
    return np.concatenate((-pos[::-1], pos[1:]))


def _free_breaks(p, L, n_panels, kink_levels):
    ell = 2 * L / n_panels
    kinks = p.kinks(-L, L)
    kinks = kinks[(kinks > -L + 1e-3 * ell) & (kinks < L - 1e-3 * ell)]
    if p.is_even:
        pos_k = kinks[kinks > 0]
        pts = np.concatenate(([0.0], pos_k, [L]))
        sharp = [bool(np.any(kinks == 0.0))] + [True] * pos_k.size + [False]
        return _mirror(_refine(pts, ell, kink_levels, sharp))
    pts = np.concatenate(([-L], kinks, [L]))
    sharp = [False] + [True] * kinks.size + [False]
    return _refine(pts, ell, kink_levels, sharp)


def _cell_breaks(p, L, n_panels, n_nodes, order, kink_levels):
    """Period-aligned layout: returns breaks, panels per cell and the period."""
    ell = 2 * L / n_panels
    if p.is_flat:
        return _mirror(ell * np.arange(n_panels // 2 + 1)), 1, ell
    lam = p.wavelength
    # panels per wavelength, from the node density requested on [-L, L]
    # (n_nodes - 1) absorbs the rounding-up of the resolution floor
    m = max(1, math.ceil((n_nodes - 1) * lam / (2 * L * order) - 1e-9))
    if p.kind is ProfileKind.SAWTOOTH:
        m += m % 2
        anchor = float(p.kinks(-0.5 * lam, 0.5 * lam)[0])
        half = _refine(np.array([0.0, 0.5 * lam]), lam / m, kink_levels, [True, True])
        cell = np.concatenate((half, lam - half[::-1][1:]))
    else:
        anchor = 0.0
        cell = np.linspace(0.0, lam, m + 1)
    if p.is_even and anchor == 0.0:
        K = math.ceil(L / lam - 1e-9)
        pos = np.concatenate([k * lam + cell[:-1] for k in range(K)] + [[K * lam]])
        return _mirror(pos), cell.size - 1, lam
    K = math.ceil((L + abs(anchor)) / lam - 1e-9)
    breaks = np.concatenate([anchor + k * lam + cell[:-1] for k in range(-K, K)] + [[anchor + K * lam]])
    return breaks, cell.size - 1, lam


def build_grid(
    p: DimensionlessProfile,
    L: float = 12.0,
    N: int = 1200,
    *,
    nodes_per_wavelength: int = 24,
    order: int = PANEL_ORDER,
    kink_levels: int = 2,
) -> LineGrid:
    """Composite Gauss-Legendre panels covering ``[-L, L]``.

    ``N`` is rounded up to an even number of panels of ``order`` nodes.
    Periodic profiles with at least ``CELL_MIN_PERIODS`` wavelengths per
    half-width get panels aligned with the period (the covered interval is
    then a whole number of wavelengths, slightly wider than ``2L``).
    Sawtooth kinks become panel boundaries, with ``kink_levels`` dyadic
    refinements on either side.
    """
    if not (math.isfinite(L) and L > 0):
        raise ValueError(f"half-width L must be positive, got {L}")
    if N < MIN_NODES:
        raise ResolutionError(f"N={N} is below the minimum of {MIN_NODES} nodes")
    floor = resolution_floor(p, L, nodes_per_wavelength)
    if N < floor:
        raise ResolutionError(
            f"N={N} violates the resolution floor: {nodes_per_wavelength} nodes per "
            f"wavelength on [-{L}, {L}] requires N >= {floor}"
        )
    if kink_levels < 0:
        raise ValueError("kink_levels must be >= 0")
    n_panels = math.ceil(N / order)
    n_panels += n_panels % 2
    if p.is_flat or (p.is_periodic and p.wavelength * CELL_MIN_PERIODS <= L):
        breaks, cell_panels, period = _cell_breaks(p, L, n_panels, N, order, kink_levels)
        return grid_from_breaks(p, breaks, order, cell_panels=cell_panels, period=period)
    return grid_from_breaks(p, _free_breaks(p, L, n_panels, kink_levels), order)


def grid_from_breaks(
    p: DimensionlessProfile,
    breaks,
    order: int = PANEL_ORDER,
    *,
    cell_panels: int | None = None,
    period: float | None = None,
) -> LineGrid:
    """Grid on the given panel boundaries; also used to share one layout between profiles."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
        raise ValueError("panel breaks must be strictly increasing")
    s, ws = gauss_legendre(order)
    a, b = breaks[:-1], breaks[1:]
    c = 0.5 * (a + b)
    hl = 0.5 * (b - a)
    x = (c[:, None] + hl[:, None] * s[None, :]).ravel()
    w = (hl[:, None] * ws[None, :]).ravel()
    symmetric = bool(p.is_even and np.array_equal(breaks, -breaks[::-1]))
    if symmetric:
        half = x.size // 2
        x[:half] = -x[half:][::-1]
        w[:half] = w[half:][::-1]
    h = np.asarray(p.height(x), dtype=float)
    slope = np.asarray(p.slope(x), dtype=float)
    sqrt_g = np.sqrt(1.0 + slope**2)
    if cell_panels is not None and (breaks.size - 1) % cell_panels:
        raise ValueError("panel count is not a whole number of cells")

    rows, panels, weights = _near_table(x, c, hl, order)
    L = float(min(-breaks[0], breaks[-1]))
    return LineGrid(p, L, breaks, order, x, w, h, slope, sqrt_g, symmetric, rows, panels, weights,
                    cell_panels, period)


def restrict_grid(grid: LineGrid, half_width: float) -> LineGrid:
    """Sub-grid made of the panels (whole cells, if any) needed to cover
    ``[-half_width, half_width]``.  Restrictions are cached on the parent."""
    b = grid.breaks
    last = b.size - 1
    lo = max(0, int(np.searchsorted(b, -half_width, side="right")) - 1)
    hi = min(last, int(np.searchsorted(b, half_width, side="left")))
    if grid.cell_panels is not None:
        c = grid.cell_panels
        lo = (lo // c) * c
        hi = min(last, -(-hi // c) * c)
    if grid.symmetric:
        lo = min(lo, last - hi)
        hi = last - lo
    if lo == 0 and hi == last:
        return grid
    key = (lo, hi)
    cache = grid.__dict__.setdefault("_restrictions", {})
    if key not in cache:
        cache[key] = grid_from_breaks(grid.profile, b[lo : hi + 1], grid.order,
                                      cell_panels=grid.cell_panels, period=grid.period)
    return cache[key]


def _near_table(x, c, hl, order):
    rows, panels, ts, scale = [], [], [], []
    for k in range(c.size):
        lo = np.searchsorted(x, c[k] - NEAR_RADIUS * hl[k], side="right")
        hi = np.searchsorted(x, c[k] + NEAR_RADIUS * hl[k], side="left")
        idx = np.arange(lo, hi)
        rows.append(idx)
        panels.append(np.full(idx.size, k))
        ts.append((x[idx] - c[k]) / hl[k])
        scale.append(np.full(idx.size, hl[k]))
    rows = np.concatenate(rows)
    panels = np.concatenate(panels)
    t = np.concatenate(ts)
    hlk = np.concatenate(scale)
    _, ws = gauss_legendre(order)
    # int_panel -ln|x - x_i| l_j(x) dx
    weights = -hlk[:, None] * (np.log(hlk)[:, None] * ws[None, :] + log_weights(t, order))
    return rows.astype(np.int64), panels.astype(np.int64), weights


@njit(cache=True, nogil=True)
def _k0_cut(u):
    return k0_scalar(u) if u < KERNEL_CUTOFF else 0.0


@njit(cache=True, nogil=True)
def _fill_direct(q, x, h, colw, fold, out):
    n = x.size
    half = n // 2
    r0 = half if fold else 0
    for r in range(out.shape[0]):
        i = r0 + r
        for j in range(n):
            if j == i:
                val = 0.0
            else:
                val = colw[j] * _k0_cut(q * math.sqrt((x[i] - x[j]) ** 2 + (h[i] - h[j]) ** 2))
            if not fold:
                out[r, j] = val
            elif j >= half:
                out[r, j - half] += val
            else:
                out[r, half - 1 - j] += val


@njit(cache=True, nogil=True)
def _cell_table(q, xr, hr, period, n_cells):
    nc = xr.size
    table = np.empty((2 * n_cells - 1, nc, nc))
    for d in range(2 * n_cells - 1):
        shift = (d - n_cells + 1) * period
        for a in range(nc):
            for b in range(nc):
                if d == n_cells - 1 and a == b:
                    table[d, a, b] = 0.0
                else:
                    dx = xr[a] - xr[b] + shift
                    table[d, a, b] = _k0_cut(q * math.sqrt(dx * dx + (hr[a] - hr[b]) ** 2))
    return table


@njit(cache=True, nogil=True)
def _fill_cells(table, n_cells, nc, colw, fold, out):
    n = colw.size
    half = n // 2
    r0 = half if fold else 0
    for r in range(out.shape[0]):
        i = r0 + r
        ci = i // nc
        a = i - ci * nc
        base = ci + n_cells - 1
        if not fold:
            for cj in range(n_cells):
                row = table[base - cj, a]
                j0 = cj * nc
                for b in range(nc):
                    out[r, j0 + b] = colw[j0 + b] * row[b]
        else:
            # columns j >= half map to j - half, columns j < half to half - 1 - j
            for cj in range(n_cells):
                row = table[base - cj, a]
                j0 = cj * nc
                for b in range(nc):
                    j = j0 + b
                    if j >= half:
                        out[r, j - half] += colw[j] * row[b]
                    else:
                        out[r, half - 1 - j] += colw[j] * row[b]


@njit(cache=True, nogil=True)
def _fix_near(q, fold, near_rows, near_panels, near_weights, order, x, h, w, sqrt_g, out):
    # replaces the plain-rule contribution of near panels by the split rule
    inv2pi = 1.0 / (2.0 * math.pi)
    n = x.size
    half = n // 2
    for k in range(near_rows.size):
        i = near_rows[k]
        if fold and i < half:
            continue
        r = i - half if fold else i
        j0 = near_panels[k] * order
        dmax = 0.0
        for jj in range(order):
            j = j0 + jj
            d = math.sqrt((x[i] - x[j]) ** 2 + (h[i] - h[j]) ** 2)
            if d > dmax:
                dmax = d
        use_i0 = q * dmax <= SPLIT_LIMIT
        for jj in range(order):
            j = j0 + jj
            if j == i:
                bessel_i = 1.0
                rem = -math.log(0.5 * q * sqrt_g[i]) - EULER_GAMMA
                plain = 0.0
            else:
                adx = abs(x[i] - x[j])
                u = q * math.sqrt(adx * adx + (h[i] - h[j]) ** 2)
                kval = _k0_cut(u)
                bessel_i = i0_scalar(u) if use_i0 else 1.0
                rem = kval + math.log(adx) * bessel_i
                plain = w[j] * kval
            delta = (near_weights[k, jj] * bessel_i + w[j] * rem - plain) * sqrt_g[j] * inv2pi
            if not fold:
                out[r, j] += delta
            elif j >= half:
                out[r, j - half] += delta
            else:
                out[r, half - 1 - j] += delta


@dataclass(frozen=True, eq=False)
class KernelSystem:
    """Linear system at one momentum.

    With ``folded=True`` the unknowns are the values on the positive half of
    a mirror-symmetric grid and columns have been summed with their mirror
    images; ``full_solution`` expands back to all nodes.
    """

    q: float
    grid: LineGrid
    matrix: np.ndarray
    rhs: np.ndarray
    folded: bool = False
    solution: np.ndarray | None = None
    residual_norm: float | None = None
    condition: float | None = None

    def full_solution(self) -> np.ndarray:
        if self.solution is None:
            raise ValueError("system has not been solved")
        if not self.folded:
            return self.solution
        return np.concatenate((self.solution[::-1], self.solution))


def sphere_rhs(q: float, grid: LineGrid, nodes=slice(None)) -> np.ndarray:
    d = np.hypot(grid.x[nodes], grid.h[nodes] - 1.0)
    if np.min(d) < MIN_CLEARANCE:
        raise GeometryError(
            f"surface comes within {np.min(d):.3g} of the sphere centre; outside the supported regime"
        )
    u = q * d
    out = np.zeros_like(u)
    live = u < KERNEL_CUTOFF
    out[live] = _k0_vec(u[live])
    return out / (2 * math.pi)


@njit(cache=True, nogil=True)
def _k0_vec(u):
    out = np.empty_like(u)
    for k in range(u.size):
        out[k] = k0_scalar(u[k])
    return out


def check_geometry(grid: LineGrid):
    p = grid.profile
    if float(p.height(0.0)) >= 1.0:
        raise GeometryError("sphere centre lies on or below the surface")


def assemble(q: float, grid: LineGrid, p: DimensionlessProfile | None = None, *, fold: bool = False) -> KernelSystem:
    """Regularised Nyström matrix and right-hand side at momentum ``q``."""
    if not (math.isfinite(q) and q > 0):
        raise ValueError(f"q must be positive, got {q}")
    if p is not None and p is not grid.profile and p != grid.profile:
        raise ValueError("profile does not match the grid's profile")
    check_geometry(grid)
    n = grid.n_nodes
    if fold and not grid.symmetric:
        raise ValueError("folding requires a mirror-symmetric grid and profile")
    colw = grid.w * grid.sqrt_g / (2 * math.pi)
    half = n // 2
    full = np.zeros((half, half) if fold else (n, n))
    if grid.cell_panels is not None:
        nc = grid.cell_panels * grid.order
        c0 = (grid.n_cells // 2) * nc
        table = _cell_table(q, grid.x[c0 : c0 + nc], grid.h[c0 : c0 + nc], grid.period, grid.n_cells)
        _fill_cells(table, grid.n_cells, nc, colw, fold, full)
    else:
        _fill_direct(q, grid.x, grid.h, colw, fold, full)
    _fix_near(q, fold, grid.near_rows, grid.near_panels, grid.near_weights, grid.order,
              grid.x, grid.h, grid.w, grid.sqrt_g, full)
    if not np.all(np.isfinite(full)):
        raise GeometryError(f"non-finite kernel values at q={q}")
    rhs = sphere_rhs(q, grid, slice(half, None) if fold else slice(None))
    matrix = full
    return KernelSystem(q=float(q), grid=grid, matrix=matrix, rhs=rhs, folded=fold)


def solve_delta_m12(system: KernelSystem) -> KernelSystem:
    """Dense LU solve with a relative residual check and a condition estimate."""
    grid = system.grid
    info = dict(q=system.q, n_nodes=grid.n_nodes, half_width=grid.half_width)
    try:
        lu, piv = linalg.lu_factor(system.matrix, check_finite=True)
    except (ValueError, linalg.LinAlgError) as exc:
        raise SolverError(f"factorisation failed: {exc}", **info) from exc
    if np.any(np.diag(lu) == 0):
        raise SolverError("singular matrix", **info)
    sol = linalg.lu_solve((lu, piv), system.rhs)
    bnorm = np.max(np.abs(system.rhs))
    res = np.max(np.abs(system.matrix @ sol - system.rhs)) / bnorm if bnorm > 0 else 0.0
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.3g} above {RESIDUAL_TOL}", **info)
    anorm = np.max(np.sum(np.abs(system.matrix), axis=0))
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else math.inf
    return replace(system, solution=sol, residual_norm=float(res), condition=float(cond))


def flat_oracle_delta(q: float, x) -> np.ndarray:
    """Flat-surface solution from its Fourier representation,
    ``(1/pi) int_0^inf cos(k x) exp(-sqrt(q^2 + k^2)) dk``, by adaptive quadrature.

    The integrand is below ``exp(-k)``, so the range is cut at
    ``k = ORACLE_KMAX`` (tail below 1e-26).
    """
    if not (math.isfinite(q) and q > 0):
        raise ValueError(f"q must be positive, got {q}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    kmax = ORACLE_KMAX + q
    f = lambda k: math.exp(-math.sqrt(q * q + k * k))  # noqa: E731
    for n, xv in enumerate(xs):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(f, 0.0, kmax, weight="cos", wvar=abs(xv),
                                        epsabs=1e-13, epsrel=1e-12, limit=1000)
            except integrate.IntegrationWarning as exc:
                raise RuntimeError(f"oracle quadrature did not converge at q={q}, x={xv}") from exc
        out[n] = val / math.pi
    return out if np.ndim(x) else out[0]
