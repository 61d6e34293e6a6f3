"""CSV persistence of sweep records and exponent tables, and plot-script emission.

Files start with ``#``-prefixed metadata lines (config hash, code version,
timestamp), then a header row and the body.  Floats are written with 17
significant digits, which round-trips IEEE doubles exactly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .analysis import SweepRecord

RECORD_COLUMNS = (
    "h_over_a", "omega_a", "phase", "c_e", "c_e_planar", "ratio", "eta_local", "n_nodes", "half_width_l",
    "q_max", "status",
)
ETA_COLUMNS = (
    "omega_a", "phase", "kind", "h_over_a", "eta", "eta_direct", "stderr", "half_width", "residual",
    "n_points", "coefficient",
)


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".17g")
    return str(v)


@dataclass
class ResultTable:
    rows: list
    metadata: dict = field(default_factory=dict)
    columns: tuple = RECORD_COLUMNS

    def body(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def text(self) -> str:
        head = "".join(f"# {k}: {v}\n" for k, v in self.metadata.items())
        return head + self.body()

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.text())
        return path


def metadata(config_hash: str, version: str) -> dict:
    return {
        "config_hash": config_hash,
        "code_version": version,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def record_rows(records) -> list[dict]:
    rows = []
    for r in records:
        rows.append({
            "h_over_a": float(r.H_over_A), "omega_a": float(r.omega_A), "phase": float(r.phase),
            "c_e": float(r.c_E), "c_e_planar": float(r.c_E_planar), "ratio": float(r.ratio),
            "eta_local": float(r.eta_local), "n_nodes": int(r.n_nodes),
            "half_width_l": float(r.settings.get("half_width", math.nan)),
            "q_max": float(r.settings.get("q_max", math.nan)), "status": r.status,
        })
    return rows


_INT_COLUMNS = {"n_nodes", "n_points"}
_STR_COLUMNS = {"status", "kind", "knob", "note"}


def read_table(path) -> ResultTable:
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines(keepends=True):
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition(":")
            meta[k.strip()] = v.strip()
        else:
            lines.append(line)
    reader = csv.reader(lines)
    columns = tuple(next(reader))
    rows = []
    for raw in reader:
        row = {}
        for c, v in zip(columns, raw):
            if c in _STR_COLUMNS:
                row[c] = v
            elif c in _INT_COLUMNS:
                row[c] = int(v)
            else:
                row[c] = float(v)
        rows.append(row)
    return ResultTable(rows, meta, columns)


def records_from_table(table: ResultTable) -> list[SweepRecord]:
    return [
        SweepRecord(
            H_over_A=r["h_over_a"], omega_A=r["omega_a"], phase=r["phase"], c_E=r["c_e"],
            c_E_planar=r["c_e_planar"], ratio=r["ratio"], eta_local=r["eta_local"], n_nodes=r["n_nodes"],
            settings={"half_width": r["half_width_l"], "q_max": r["q_max"]}, status=r["status"],
        )
        for r in table.rows
    ]


def plot_script(results_csv: str, omega_values, phase_values=None) -> str:
    """Gnuplot script: ratio against H/A on a log abscissa, one series per omega*A."""
    lines = [
        "# energy ratio against separation, one series per corrugation frequency",
        "set datafile separator ','",
        "set logscale x",
        "set xlabel 'H/A'",
        "set ylabel 'E / E_planar'",
        "set key top right",
        "set terminal pngcairo size 800,600",
        "set output 'ratio.png'",
    ]
    series = []
    phases = list(phase_values) if phase_values else [None]
    for w in omega_values:
        for ph in phases:
            cond = f"abs($2-{w!r})<1e-12"
            title = f"omega A = {w:g}"
            if ph is not None and len(phases) > 1:
                cond += f" && abs($3-({ph!r}))<1e-12"
                title += f", phi = {ph:.4g}"
            series.append(f"'{results_csv}' every ::1 using 1:({cond} ? $6 : 1/0) with linespoints title '{title}'")
    lines.append("plot " + ", \\\n     ".join(series))
    return "\n".join(lines) + "\n"
