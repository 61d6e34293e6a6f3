"""Command-line front end.

    casimir-polder run CONFIG [--output-dir DIR] [--threads N] [--override section.key=value ...]
    casimir-polder converge CONFIG [...]

Exit codes: 0 success, 1 convergence tolerance exceeded, 2 configuration
error, 3 numerical failure.  The thread count falls back to the
``CASIMIR_POLDER_THREADS`` environment variable when ``--threads`` is absent.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__
from .analysis import (
    InsufficientDataError,
    SweepRecord,
    drop_off_exponent,
    anomalous_dimension,
    rise_exponent,
    sweep,
    sweep_profile,
    universal_tail,
    with_local_eta,
)
from .config import ConfigError, RunConfig, load
from .energy import energy_coefficient
from .kernels import GeometryError
from .profiles import HeightProfile, ProfileError, ProfileKind, reduce
from .results import ETA_COLUMNS, RECORD_COLUMNS, ResultTable, metadata, plot_script, record_rows
from .solver import ResolutionError, SolverError

THREADS_ENV = "CASIMIR_POLDER_THREADS"
EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _threads(arg) -> int:
    if arg is not None:
        n = arg
    else:
        raw = os.environ.get(THREADS_ENV)
        if raw is None:
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def _curves(cfg: RunConfig, settings, log) -> list[list[SweepRecord]]:
    kind = ProfileKind(cfg.profile.kind)
    if kind is ProfileKind.TABULATED:
        profile = HeightProfile.tabulated(cfg.samples(), reference=cfg.profile.reference)
        H = cfg.geometry.H if cfg.geometry.H is not None else cfg.geometry.H_over_A
        return [sweep_profile(profile, H, settings, progress=log)]
    out = []
    for w in cfg.omega_A_values():
        for ph in cfg.phase_values():
            out.append(sweep(w, ph, cfg.H_over_A_values(), settings, kind=kind,
                             reference=cfg.profile.reference, progress=log))
    return out


def _eta_rows(curve, cfg) -> list[dict]:
    rows = []
    head = curve[0]
    base = {"omega_a": head.omega_A, "phase": head.phase}

    def add(kind, e, coefficient=math.nan):
        rows.append(eta_row(base, kind, e, coefficient))

    window = cfg.sweep.eta_window
    try:
        for e in anomalous_dimension(curve, window):
            add("local", e)
    except InsufficientDataError:
        return rows
    try:
        add("drop_off", drop_off_exponent(curve, window))
    except InsufficientDataError:
        pass
    try:
        r = rise_exponent(curve, window)
        rows.append(dict(base, kind="rise", h_over_a=r.H_over_A, eta=r.eta, eta_direct=math.nan,
                         stderr=r.stderr, half_width=window, residual=r.residual, n_points=r.n_points,
                         coefficient=r.coefficient))
    except InsufficientDataError:
        pass
    return rows


def eta_row(base, kind, e, coefficient=math.nan) -> dict:
    return dict(base, kind=kind, h_over_a=e.H_over_A, eta=e.eta, eta_direct=e.eta_direct, stderr=e.stderr,
                half_width=e.half_width, residual=e.residual, n_points=e.n_points, coefficient=coefficient)


def run(cfg: RunConfig, out_dir: Path, threads: int, stream=None) -> int:
    stream = stream or sys.stderr
    settings = cfg.numerics.settings(threads)

    def log(rec):
        print(f"  H/A={rec.H_over_A:.6g} omega*A={rec.omega_A:g} ratio={rec.ratio:.10g} {rec.status}",
              file=stream, flush=True)
        if rec.error:
            print(f"    {rec.error}", file=stream, flush=True)

    with threadpool_limits(limits=1):
        curves = _curves(cfg, settings, log)
    curves = [with_local_eta(c, cfg.sweep.eta_window) for c in curves]
    records = [r for c in curves for r in c]
    eta_rows = [row for c in curves for row in _eta_rows(c, cfg)]
    by_phase = {}
    for c in curves:
        by_phase.setdefault(c[0].phase, {})[c[0].omega_A] = c
    for ph, group in by_phase.items():
        if len(group) < 2:
            continue
        try:
            tail = universal_tail(group, cfg.sweep.tail_probe, cfg.sweep.eta_window)
        except InsufficientDataError:
            continue
        # coefficient column carries the pairwise spread for tail rows
        for w, e in tail.estimates.items():
            eta_rows.append(eta_row({"omega_a": w, "phase": ph}, "tail", e, tail.spread))

    out_dir.mkdir(parents=True, exist_ok=True)
    meta = metadata(cfg.hash(), __version__)
    ResultTable(record_rows(records), meta, RECORD_COLUMNS).write(out_dir / "results.csv")
    ResultTable(eta_rows, meta, ETA_COLUMNS).write(out_dir / "eta.csv")
    if cfg.output.plot_script:
        phases = sorted({c[0].phase for c in curves if not math.isnan(c[0].phase)})
        omegas = sorted({c[0].omega_A for c in curves if not math.isnan(c[0].omega_A)})
        (out_dir / "ratio.gp").write_text(plot_script("results.csv", omegas or [math.nan], phases))

    failed = [r for r in records if r.status == "failed"]
    if failed:
        for r in failed:
            print(f"numerical failure at H/A={r.H_over_A:.6g}, omega*A={r.omega_A:g}: {r.error}", file=stream)
        return EXIT_NUMERIC
    return EXIT_OK


KNOBS = ("N", "L", "q_nodes", "q_max")


def _doubled(settings, knob):
    if knob == "N":
        return replace(settings, n_nodes=2 * settings.n_nodes)
    if knob == "L":
        # truncation test at fixed node density
        return replace(settings, half_width=2 * settings.half_width, n_nodes=2 * settings.n_nodes)
    if knob == "q_nodes":
        return replace(settings, q_nodes=2 * settings.q_nodes)
    return replace(settings, q_max=2 * settings.q_max)


def converge(cfg: RunConfig, out_dir: Path, threads: int, stream=None) -> int:
    """Relative change of ``c_E`` when each knob is doubled on its own.

    Node counts are used as configured; a configuration below the
    resolution floor counts as a breach.
    """
    stream = stream or sys.stdout
    settings = cfg.numerics.settings(threads)
    hs = cfg.converge.H_over_A
    if hs is None:
        allh = cfg.H_over_A_values()
        hs = sorted({allh[0], allh[len(allh) // 2], allh[-1]})
    kind = ProfileKind(cfg.profile.kind)
    if kind is ProfileKind.TABULATED:
        base_profiles = [(math.nan, HeightProfile.tabulated(cfg.samples(), reference=cfg.profile.reference))]
    else:
        base_profiles = [
            (w, HeightProfile(kind, 0.0 if kind is ProfileKind.FLAT else 1.0, w, cfg.phase_values()[0],
                              reference=cfg.profile.reference))
            for w in cfg.omega_A_values()
        ]
    rows, worst = [], 0.0
    with threadpool_limits(limits=1):
        for w, prof in base_profiles:
            for H in hs:
                p = reduce(prof, H)

                def c_e(s):
                    return energy_coefficient(p, s.grid(p), s.momentum_grid(), s).c_E

                try:
                    c0 = c_e(settings)
                except ResolutionError as exc:
                    rows.append(dict(omega_a=w, h_over_a=H, knob="floor", c_e=math.nan, c_e_doubled=math.nan,
                                     rel_change=math.inf, note=str(exc)))
                    worst = math.inf
                    continue
                except (SolverError, GeometryError, ProfileError, ArithmeticError) as exc:
                    print(f"numerical failure at H/A={H:.6g}, omega*A={w:g}: {exc}", file=sys.stderr)
                    return EXIT_NUMERIC
                for knob in KNOBS:
                    try:
                        c1 = c_e(_doubled(settings, knob))
                    except (SolverError, GeometryError, ProfileError, ArithmeticError) as exc:
                        print(f"numerical failure at H/A={H:.6g}, omega*A={w:g} ({knob} doubled): {exc}",
                              file=sys.stderr)
                        return EXIT_NUMERIC
                    rel = abs(c1 - c0) / abs(c0)
                    worst = max(worst, rel)
                    rows.append(dict(omega_a=w, h_over_a=H, knob=knob, c_e=c0, c_e_doubled=c1,
                                     rel_change=rel, note=""))
    cols = ("omega_a", "h_over_a", "knob", "c_e", "c_e_doubled", "rel_change", "note")
    out_dir.mkdir(parents=True, exist_ok=True)
    ResultTable(rows, metadata(cfg.hash(), __version__), cols).write(out_dir / "converge.csv")
    print(f"{'omega*A':>8} {'H/A':>10} {'knob':>8} {'rel. change':>12}", file=stream)
    for r in rows:
        print(f"{r['omega_a']:>8g} {r['h_over_a']:>10.4g} {r['knob']:>8} {r['rel_change']:>12.3e}", file=stream)
    for knob in KNOBS + ("floor",):
        vals = [r["rel_change"] for r in rows if r["knob"] == knob]
        if vals:
            print(f"max change for {knob}: {max(vals):.3e}", file=stream)
    tol = cfg.converge.tolerance
    if worst > tol:
        print(f"convergence tolerance {tol:g} exceeded (worst {worst:.3e})", file=stream)
        return EXIT_BREACH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="casimir-polder", description="Atom-surface energies above corrugated plates.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "sweep the configured separations and write result tables"),
                        ("converge", "double each resolution knob and report the change in c_E")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="run configuration (section.key = value lines)")
        p.add_argument("--output-dir", help="overrides output.directory")
        p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
        p.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one configuration entry; repeatable")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config, args.override)
        threads = _threads(args.threads)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.output_dir or cfg.output.directory)
    try:
        if args.command == "run":
            return run(cfg, out_dir, threads)
        return converge(cfg, out_dir, threads)
    except (ResolutionError, ProfileError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
