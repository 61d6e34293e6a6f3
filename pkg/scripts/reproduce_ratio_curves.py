"""Ratio curves E/E_planar against H/A for omega*A = 1, 2, 3 and the
exponents extracted from them.

    python3 scripts/reproduce_ratio_curves.py [--step 0.15] [--threads 4] [--out results/curves]

Writes results.csv, eta.csv and ratio.gp to the output directory and prints
a summary table.
"""
import argparse
import math
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from casimir_polder import __version__
from casimir_polder.analysis import (
    InsufficientDataError,
    drop_off_exponent,
    log_spaced,
    peak,
    rise_exponent,
    sweep,
    universal_tail,
    with_local_eta,
)
from casimir_polder.cli import eta_row
from casimir_polder.energy import NumericalSettings
from casimir_polder.results import ETA_COLUMNS, RECORD_COLUMNS, ResultTable, plot_script, record_rows

PHASE = -math.pi / 2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega-A", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--lo", type=float, default=0.05)
    ap.add_argument("--hi", type=float, default=20.0)
    ap.add_argument("--step", type=float, default=0.15, help="spacing in ln(H/A)")
    ap.add_argument("--window", type=float, default=0.15, help="fit half-width in ln(H/A)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results/curves")
    args = ap.parse_args(argv)

    settings = NumericalSettings(threads=args.threads)
    hs = log_spaced(args.lo, args.hi, args.step)
    t0 = time.perf_counter()

    def log(r):
        print(f"  omega*A={r.omega_A:g} H/A={r.H_over_A:8.4f} ratio={r.ratio:.8f} N={r.n_nodes} "
              f"{r.status} [{time.perf_counter() - t0:.0f} s]", file=sys.stderr, flush=True)

    curves = {}
    with threadpool_limits(limits=1):
        for w in args.omega_A:
            curves[w] = with_local_eta(sweep(w, PHASE, hs, settings, progress=log), args.window)

    rows, summary = [], []
    for w, recs in curves.items():
        base = {"omega_a": w, "phase": PHASE}
        top = peak(recs)
        drop = drop_off_exponent(recs, args.window)
        rise = rise_exponent(recs, args.window)
        rows.append(eta_row(base, "drop_off", drop))
        rows.append(dict(base, kind="rise", h_over_a=rise.H_over_A, eta=rise.eta, eta_direct=math.nan,
                         stderr=rise.stderr, half_width=args.window, residual=rise.residual,
                         n_points=rise.n_points, coefficient=rise.coefficient))
        summary.append((w, top.H_over_A, top.ratio, rise.eta, rise.coefficient, drop.H_over_A, drop.eta))
    try:
        tail = universal_tail(curves, 10.0, args.window)
        for w, e in tail.estimates.items():
            rows.append(eta_row({"omega_a": w, "phase": PHASE}, "tail", e, tail.spread))
    except InsufficientDataError as exc:
        tail = None
        print(f"tail fit skipped: {exc}", file=sys.stderr)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"code_version": __version__, "settings": settings.snapshot()}
    ResultTable(record_rows([r for c in curves.values() for r in c]), meta, RECORD_COLUMNS).write(out / "results.csv")
    ResultTable(rows, meta, ETA_COLUMNS).write(out / "eta.csv")
    (out / "ratio.gp").write_text(plot_script("results.csv", list(curves)))

    print(f"{'omega*A':>8} {'H/A peak':>9} {'peak':>8} {'rise eta':>9} {'c':>7} {'H/A drop':>9} {'drop eta':>9}")
    for w, hp, rp, re, c, hd, de in summary:
        print(f"{w:>8g} {hp:>9.3f} {rp:>8.4f} {re:>9.3f} {c:>7.3f} {hd:>9.3f} {de:>9.3f}")
    if tail is not None:
        print("tail eta near H/A = 10: " + ", ".join(f"{w:g}: {e.eta:.3f}" for w, e in tail.estimates.items())
              + f" (spread {tail.spread:.3f})")
    print(f"total {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
