"""Run configuration: flat ``section.key = value`` text -> validated :class:`RunConfig`.

Example::

    # comment lines start with '#'
    profile.kind = sine
    profile.phase = -pi/2
    geometry.H_over_A = 0.5, 1, 2, 5
    numerics.N = 1200
    sweep.omega_A = 1, 2, 3

Sections: ``profile`` (kind, amplitude, omega, phase, reference,
samples_path), ``geometry`` (H_over_A or H), ``numerics`` (L, N, q_max,
q_nodes, nodes_per_wavelength, panel_order, kink_levels, shrink,
min_half_width), ``sweep`` (omega_A, phase, eta_window, tail_probe),
``converge`` (tolerance, H_over_A) and ``output`` (directory, formats,
plot_script).  List values are comma-separated.  Phases may be numbers or
multiples of ``pi`` (``-pi/2``).  Unknown or repeated keys are rejected with
their line number.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .energy import NumericalSettings
from .profiles import REFERENCES, HeightProfile, ProfileError, ProfileKind
from .solver import MIN_NODES


class ConfigError(ValueError):
    pass


_PI_RE = re.compile(r"^\s*([+-]?\s*\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(value) -> float:
    """Number, or ``[k]*pi[/m]`` as a string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        m = _PI_RE.match(value)
        if m:
            k = m.group(1).replace(" ", "")
            k = -1.0 if k == "-" else 1.0 if k in ("", "+") else float(k)
            return k * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    raise ValueError(f"not an angle: {value!r}")


@dataclass(frozen=True)
class ProfileConfig:
    kind: str = "sine"
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = -math.pi / 2
    reference: str = "local"
    samples_path: str | None = None


@dataclass(frozen=True)
class GeometryConfig:
    H_over_A: tuple = (1.0,)
    H: tuple | None = None


@dataclass(frozen=True)
class NumericsConfig:
    L: float = 24.0
    N: int = 1200
    q_max: float = 30.0
    q_nodes: int = 96
    nodes_per_wavelength: int = 24
    panel_order: int = 24
    kink_levels: int = 2
    shrink: float | None = 10.0
    min_half_width: float = 4.0

    def settings(self, threads: int = 1) -> NumericalSettings:
        return NumericalSettings(
            half_width=self.L, n_nodes=self.N, nodes_per_wavelength=self.nodes_per_wavelength,
            panel_order=self.panel_order, kink_levels=self.kink_levels, q_max=self.q_max,
            q_nodes=self.q_nodes, shrink=self.shrink, min_half_width=self.min_half_width,
            threads=threads,
        )


@dataclass(frozen=True)
class SweepConfig:
    omega_A: tuple | None = None
    phase: tuple | None = None
    eta_window: float = 0.15
    tail_probe: float = 10.0


@dataclass(frozen=True)
class ConvergeConfig:
    tolerance: float = 1e-6
    H_over_A: tuple | None = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    formats: tuple = ("csv",)
    plot_script: bool = True


@dataclass(frozen=True)
class RunConfig:
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    converge: ConvergeConfig = field(default_factory=ConvergeConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: str = field(default=".", compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def hash(self) -> str:
        """Digest of the fields that affect computed values (output options excluded)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # derived quantities
    def omega_A_values(self) -> list[float]:
        if self.sweep.omega_A is not None:
            return list(self.sweep.omega_A)
        if self.profile.kind == "flat":
            return [1.0]
        return [self.profile.omega * self.profile.amplitude]

    def phase_values(self) -> list[float]:
        return list(self.sweep.phase) if self.sweep.phase is not None else [self.profile.phase]

    def H_over_A_values(self) -> list[float]:
        if self.geometry.H is not None:
            amp = self.profile.amplitude if self.profile.kind != "flat" and self.profile.amplitude > 0 else 1.0
            return sorted(h / amp for h in self.geometry.H)
        return list(self.geometry.H_over_A)

    def samples(self):
        if self.profile.samples_path is None:
            return None
        path = Path(self.base_dir) / self.profile.samples_path
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        if rows and rows[0][0].strip().lower() == "x":
            rows = rows[1:]
        return [(float(a), float(b)) for a, b in rows]


_SECTIONS = {f.name: f.type for f in fields(RunConfig) if f.name != "base_dir"}
_CLASSES = {
    "profile": ProfileConfig,
    "geometry": GeometryConfig,
    "numerics": NumericsConfig,
    "sweep": SweepConfig,
    "converge": ConvergeConfig,
    "output": OutputConfig,
}


_LINE_RE = re.compile(r"^([A-Za-z_]\w*)\.([A-Za-z_]\w*)\s*=\s*(.*?)\s*$")


def _parse_line(line: str, lineno: int | None):
    m = _LINE_RE.match(line)
    where = f" (line {lineno})" if lineno is not None else ""
    if not m:
        raise ConfigError(f"expected 'section.key = value'{where}: {line.strip()!r}")
    section, key, value = m.groups()
    if value == "":
        raise ConfigError(f"missing value for {section}.{key}{where}")
    return section, key, value


def parse_text(text: str) -> tuple[dict, dict]:
    """Raw string values keyed by section and key, and dotted key -> line number."""
    data: dict = {}
    lines: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        section, key, value = _parse_line(line, n)
        dotted = f"{section}.{key}"
        if dotted in lines:
            raise ConfigError(f"repeated key {dotted} (lines {lines[dotted]} and {n})")
        lines[dotted] = n
        data.setdefault(section, {})[key] = value
    return data, lines


def _where(key, lines):
    return f"{key} (line {lines[key]})" if key in lines else key


def _as_tuple(v, conv, key, lines):
    if isinstance(v, str):
        v = v.strip()
        if v.startswith("[") and v.endswith("]"):
            v = v[1:-1]
        items = [x.strip() for x in v.split(",") if x.strip()]
    elif isinstance(v, (list, tuple)):
        items = v
    else:
        items = [v]
    try:
        return tuple(conv(x) for x in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{_where(key, lines)}: {exc}") from None


def _number(v):
    if isinstance(v, bool):
        raise ValueError(f"expected a number, got {v!r}")
    return float(v)


def _integer(v):
    if isinstance(v, bool) or float(v) != int(float(v)):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(float(v))


def _optional_number(v):
    if v is None or (isinstance(v, str) and v.strip().lower() == "none"):
        return None
    return _number(v)


def _boolean(v):
    if isinstance(v, bool):
        return v
    t = str(v).strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true or false, got {v!r}")


def _text(v):
    return str(v).strip().strip("'\"")


_CONVERTERS = {
    ("profile", "amplitude"): _number,
    ("profile", "omega"): _number,
    ("profile", "phase"): parse_angle,
    ("numerics", "L"): _number,
    ("numerics", "N"): _integer,
    ("numerics", "q_max"): _number,
    ("numerics", "q_nodes"): _integer,
    ("numerics", "nodes_per_wavelength"): _integer,
    ("numerics", "panel_order"): _integer,
    ("numerics", "kink_levels"): _integer,
    ("numerics", "shrink"): _optional_number,
    ("numerics", "min_half_width"): _number,
    ("sweep", "eta_window"): _number,
    ("sweep", "tail_probe"): _number,
    ("converge", "tolerance"): _number,
    ("profile", "kind"): _text,
    ("profile", "reference"): _text,
    ("profile", "samples_path"): _text,
    ("output", "directory"): _text,
    ("output", "plot_script"): _boolean,
}
_LISTS = {
    ("geometry", "H_over_A"): _number,
    ("geometry", "H"): _number,
    ("sweep", "omega_A"): _number,
    ("sweep", "phase"): parse_angle,
    ("converge", "H_over_A"): _number,
    ("output", "formats"): _text,
}


def from_mapping(data: dict, lines: dict | None = None, base_dir: str = ".") -> RunConfig:
    lines = lines or {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    sections = {}
    for name, block in data.items():
        if name not in _CLASSES:
            raise ConfigError(f"unknown section {_where(str(name), lines)}; expected one of {sorted(_CLASSES)}")
        if block is None:
            block = {}
        if not isinstance(block, dict):
            raise ConfigError(f"section {_where(name, lines)} must be a mapping")
        cls = _CLASSES[name]
        known = {f.name for f in fields(cls)}
        values = {}
        for key, v in block.items():
            dotted = f"{name}.{key}"
            if key not in known:
                raise ConfigError(f"unknown key {_where(dotted, lines)}; expected one of {sorted(known)}")
            if (name, key) in _LISTS:
                values[key] = None if v is None else _as_tuple(v, _LISTS[(name, key)], dotted, lines)
            elif (name, key) in _CONVERTERS:
                try:
                    values[key] = _CONVERTERS[(name, key)](v)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{_where(dotted, lines)}: {exc}") from None
            else:
                values[key] = v
        sections[name] = cls(**values)
    cfg = RunConfig(**sections, base_dir=base_dir)
    validate(cfg, lines)
    return cfg


def validate(cfg: RunConfig, lines: dict | None = None) -> None:
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(f"{_where(key, lines)}: {msg}")

    p = cfg.profile
    try:
        kind = ProfileKind(p.kind)
    except ValueError:
        fail("profile.kind", f"unknown profile kind {p.kind!r}")
    if p.reference not in REFERENCES:
        fail("profile.reference", f"must be one of {REFERENCES}")
    if not (math.isfinite(p.amplitude) and p.amplitude >= 0):
        fail("profile.amplitude", "must be finite and >= 0")
    if not (math.isfinite(p.omega) and p.omega > 0):
        fail("profile.omega", "must be > 0")
    if not math.isfinite(p.phase):
        fail("profile.phase", "must be finite")
    if kind is ProfileKind.TABULATED:
        if p.samples_path is None:
            fail("profile.samples_path", "required for a tabulated profile")
        try:
            HeightProfile.tabulated(cfg.samples(), reference=p.reference)
        except (OSError, ValueError, ProfileError) as exc:
            fail("profile.samples_path", str(exc))
    elif p.samples_path is not None:
        fail("profile.samples_path", "only valid for a tabulated profile")

    g = cfg.geometry
    for key, vals in (("geometry.H_over_A", g.H_over_A), ("geometry.H", g.H)):
        if vals is None:
            continue
        if not vals:
            fail(key, "must not be empty")
        if any(not (math.isfinite(v) and v > 0) for v in vals):
            fail(key, "all values must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            fail(key, "values must be strictly increasing")

    n = cfg.numerics
    if not (math.isfinite(n.L) and n.L > 0):
        fail("numerics.L", "must be positive")
    if n.N < MIN_NODES:
        fail("numerics.N", f"N={n.N} is below the resolution floor of {MIN_NODES} nodes")
    if n.nodes_per_wavelength < 1:
        fail("numerics.nodes_per_wavelength", "must be >= 1")
    if n.panel_order < 2:
        fail("numerics.panel_order", "must be >= 2")
    if n.kink_levels < 0:
        fail("numerics.kink_levels", "must be >= 0")
    try:
        n.settings()
    except ValueError as exc:
        fail("numerics", str(exc))

    s = cfg.sweep
    if s.omega_A is not None and any(not (math.isfinite(v) and v > 0) for v in s.omega_A):
        fail("sweep.omega_A", "all values must be positive")
    if s.phase is not None and any(not math.isfinite(v) for v in s.phase):
        fail("sweep.phase", "phases must be finite")
    if not s.eta_window > 0:
        fail("sweep.eta_window", "must be positive")
    if not s.tail_probe > 0:
        fail("sweep.tail_probe", "must be positive")

    c = cfg.converge
    if not c.tolerance > 0:
        fail("converge.tolerance", "must be positive")
    if c.H_over_A is not None and any(not v > 0 for v in c.H_over_A):
        fail("converge.H_over_A", "all values must be positive")

    o = cfg.output
    bad = set(o.formats) - {"csv"}
    if bad:
        fail("output.formats", f"unsupported formats {sorted(bad)}")


def apply_override(data: dict, item: str) -> dict:
    """Apply one ``section.key=value`` override to raw parsed data."""
    section, key, value = _parse_line(item.strip(), None)
    data = {k: dict(v) for k, v in (data or {}).items()}
    data.setdefault(section, {})[key] = value
    return data


def loads(text: str, overrides=(), base_dir: str = ".") -> RunConfig:
    data, lines = parse_text(text)
    for item in overrides:
        section, key, _ = _parse_line(item.strip(), None)
        data = apply_override(data, item)
        # the overridden value no longer comes from the file
        lines.pop(f"{section}.{key}", None)
    return from_mapping(data, lines, base_dir=base_dir)


def load(path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return loads(text, overrides, base_dir=str(path.parent))


def with_numerics(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, numerics=replace(cfg.numerics, **changes))
