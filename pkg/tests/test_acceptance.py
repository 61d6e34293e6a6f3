"""Acceptance gate: each test checks one criterion at its stated tolerance
and reports a pass/fail line in the terminal summary."""
import math
import time

import numpy as np
import pytest

from casimir_polder import cli
from casimir_polder.analysis import (
    SweepRecord,
    anomalous_dimension,
    drop_off_exponent,
    log_spaced,
    peak,
    rise_exponent,
    sweep,
    universal_tail,
)
from casimir_polder.energy import PLANAR_COEFFICIENT, NumericalSettings, energy_ratio
from casimir_polder.kernels import m11
from casimir_polder.profiles import HeightProfile, reduce
from casimir_polder.results import read_table
from casimir_polder.solver import assemble, build_grid, flat_oracle_delta, solve_delta_m12

PHASE = -math.pi / 2
OMEGAS = (1.0, 2.0, 3.0)
SWEEP_H = log_spaced(0.05, 20.0, 0.15)
DEFAULT = NumericalSettings()
FLAT = reduce(HeightProfile.flat(), 1.0)


@pytest.fixture(scope="session")
def curves():
    """Full sweeps at default resolution, one per corrugation frequency."""
    return {w: sweep(w, PHASE, SWEEP_H, DEFAULT) for w in OMEGAS}


def test_criterion_1_planar_oracle(criterion):
    t = time.perf_counter()
    res = energy_ratio(FLAT, DEFAULT)
    elapsed = time.perf_counter() - t
    err = abs(res.c_E / PLANAR_COEFFICIENT - 1)
    criterion(1, err <= 1e-5 and elapsed < 30,
              f"c_E*8pi - 1 = {err:.2e} (tol 1e-5), {elapsed:.1f} s (limit 30 s)")


def test_criterion_2_flat_solution(criterion):
    grid = DEFAULT.grid(FLAT)
    worst = {}
    for q in (0.25, 1.0, 4.0):
        s = solve_delta_m12(assemble(q, grid, fold=grid.symmetric))
        sel = np.abs(grid.x) <= 4.0
        worst[q] = float(np.max(np.abs(s.full_solution()[sel] - flat_oracle_delta(q, grid.x[sel]))))
    ok = max(worst.values()) <= 1e-6
    criterion(2, ok, "max |delta - oracle| on |x| <= 4: "
              + ", ".join(f"q={q:g}: {v:.1e}" for q, v in worst.items()) + " (tol 1e-6)")


def test_criterion_3_limits(criterion):
    small, large = sweep(2.0, PHASE, [0.2, 50.0], DEFAULT)
    ok_large = large.ok and 0.98 <= large.ratio <= 1.02
    ok_small = small.ok and 0.90 <= small.ratio <= 1.10
    criterion(3, ok_large and ok_small,
              f"omega*A=2: ratio(H/A=50) = {large.ratio:.6f} in [0.98, 1.02]: {ok_large}; "
              f"ratio(H/A=0.2) = {small.ratio:.6f} in [0.90, 1.10]: {ok_small}")


def test_criterion_4_peak_region(criterion, curves):
    peaks, interior = {}, {}
    for w, recs in curves.items():
        window = [r for r in recs if 0.3 <= r.H_over_A <= 20.0]
        top = peak(window)
        peaks[w] = top.ratio
        interior[w] = top.ratio > 1.0 and top is not window[0] and top is not window[-1]
    rising = all(peaks[a] < peaks[b] for a, b in zip(OMEGAS, OMEGAS[1:]))
    criterion(4, all(interior.values()) and rising,
              "peak ratios " + ", ".join(f"omega*A={w:g}: {peaks[w]:.4f}" for w in OMEGAS)
              + f"; interior maxima {all(interior.values())}; increasing in omega*A {rising}")


def test_criterion_5_pre_peak_scaling(criterion, curves):
    fits = {w: rise_exponent(recs) for w, recs in curves.items()}
    ok = all(abs(f.eta + 1) <= 0.15 for f in fits.values())
    criterion(5, ok, "rise eta " + ", ".join(
        f"omega*A={w:g}: {f.eta:.3f} at H/A={f.H_over_A:.3g} (c={f.coefficient:.3f})" for w, f in fits.items())
        + " (target -1 +- 0.15)")


def test_criterion_6_drop_off(criterion, curves):
    target = {1.0: 0.4, 2.0: 1.0, 3.0: 1.6}
    fits = {w: drop_off_exponent(recs) for w, recs in curves.items()}
    ok = all(abs(fits[w].eta - target[w]) <= 0.2 for w in OMEGAS)
    criterion(6, ok, "drop-off eta " + ", ".join(
        f"omega*A={w:g}: {fits[w].eta:.3f} at H/A={fits[w].H_over_A:.3g} (target {target[w]})" for w in OMEGAS)
        + " (tol 0.2)")


def test_criterion_7_universal_tail(criterion, curves):
    tail = universal_tail(curves, 10.0)
    inside = all(0.1 <= e.eta <= 0.3 for e in tail.estimates.values())
    ok = inside and tail.spread <= 0.1
    criterion(7, ok, "tail eta " + ", ".join(
        f"omega*A={w:g}: {e.eta:.3f} at H/A={e.H_over_A:.3g}" for w, e in tail.estimates.items())
        + f" (window [0.1, 0.3]); spread {tail.spread:.3f} (limit 0.1)")


def _property_checks(tmp_path):
    """Name -> (ok, detail) for the always-runnable property suite."""
    out = {}
    rng = np.random.default_rng(7)

    sine = reduce(HeightProfile.sine(1.0, 2.0, 0.4), 1.5)
    xs = rng.uniform(-5, 5, (50, 2))
    sym = max(abs(m11(0.7, a, b, sine) - m11(0.7, b, a, sine)) for a, b in xs)
    out["kernel symmetry"] = (sym == 0.0, f"max asymmetry {sym:.1e}")

    x = np.linspace(-20, 20, 4001)
    g_min = min(float(np.min(reduce(HeightProfile(k, 1.0, 2.3, 0.1), 0.7).metric_factor(x)))
                for k in ("sine", "sawtooth"))
    out["metric factor >= 1"] = (g_min >= 1.0, f"min sqrt(g) {g_min:.6f}")

    r0 = energy_ratio(reduce(HeightProfile.sine(1.0, 1.0, 0.3), 2.0), DEFAULT, autoscale=True)
    r1 = energy_ratio(reduce(HeightProfile.sine(1.0, 1.0, 0.3 + 2 * math.pi), 2.0), DEFAULT, autoscale=True)
    r2 = energy_ratio(reduce(HeightProfile.sine(1.0, 1.0, math.pi - 0.3), 2.0), DEFAULT, autoscale=True)
    out["c_E > 0"] = (min(r0.c_E, r1.c_E, r2.c_E, r0.c_E_planar) > 0, f"c_E = {r0.c_E:.6g}")
    out["phase periodicity"] = (abs(r0.ratio - r1.ratio) <= 1e-6, f"|diff| {abs(r0.ratio - r1.ratio):.1e}")
    out["mirror symmetry"] = (abs(r0.ratio - r2.ratio) <= 1e-6, f"|diff| {abs(r0.ratio - r2.ratio):.1e}")

    prof = HeightProfile.sine(0.8, 1.7, 0.2)
    a = reduce(prof, 1.3)
    b = reduce(HeightProfile.sine(0.8 * 3.1, 1.7 / 3.1, 0.2), 1.3 * 3.1)
    ok = math.isclose(a.a, b.a, rel_tol=1e-14) and math.isclose(a.nu, b.nu, rel_tol=1e-14)
    out["scale invariance of reduce"] = (ok, f"a {a.a:.15g}/{b.a:.15g}, nu {a.nu:.15g}/{b.nu:.15g}")

    H = log_spaced(0.5, 20.0, 0.15)
    worst = 0.0
    for eta in (-1.0, 0.0, 0.4, 1.6):
        recs = [SweepRecord(h, 1.0, 0.0, c_E=h**-eta, c_E_planar=1.0, ratio=h**-eta) for h in H]
        worst = max(worst, max(abs(e.eta - eta) for e in anomalous_dimension(recs)))
    out["power-law fit recovery"] = (worst <= 1e-10, f"max error {worst:.1e}")

    cfg = tmp_path / "flat.cfg"
    cfg.write_text("profile.kind = flat\ngeometry.H_over_A = 1\nconverge.tolerance = 1e-6\n")
    code = cli.main(["converge", str(cfg), "--output-dir", str(tmp_path / "conv")])
    deltas = {r["knob"]: r["rel_change"] for r in read_table(tmp_path / "conv" / "converge.csv").rows}
    out["flat convergence doubling"] = (code == 0 and max(deltas.values()) <= 1e-6,
                                        ", ".join(f"{k} {v:.1e}" for k, v in deltas.items()))

    cfg = tmp_path / "sine.cfg"
    cfg.write_text("profile.kind = sine\nprofile.omega = 1\nprofile.phase = 0.3\n"
                   "geometry.H_over_A = 1, 2\nnumerics.N = 800\nnumerics.L = 12\nnumerics.q_nodes = 48\n")
    bodies = []
    for threads in (1, 3):
        d = tmp_path / f"t{threads}"
        assert cli.main(["run", str(cfg), "--output-dir", str(d), "--threads", str(threads)]) == 0
        text = (d / "results.csv").read_text()
        bodies.append("".join(line for line in text.splitlines(True) if not line.startswith("#")))
    out["determinism across threads"] = (bodies[0] == bodies[1], "CSV bodies identical" if bodies[0] == bodies[1]
                                         else "CSV bodies differ")
    return out


def test_criterion_8_property_suite(criterion, tmp_path):
    t = time.perf_counter()
    checks = _property_checks(tmp_path)
    elapsed = time.perf_counter() - t
    failed = [k for k, (ok, _) in checks.items() if not ok]
    detail = "; ".join(f"{k}: {'ok' if ok else 'FAIL'} ({d})" for k, (ok, d) in checks.items())
    criterion(8, not failed and elapsed < 300, f"{detail}; {elapsed:.0f} s (limit 300 s)")
