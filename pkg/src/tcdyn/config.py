"""Experiment configuration: a line-oriented `key = value` format with [section] headers.

Sections: [params], [scheme], [run], [initial] and one [grid.<axis>] per grid
axis (g, kappa, tau, lambda, n1, n2). '#' and ';' start comment lines. Every
key is optional; defaults are the baseline upper-panel parameters.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ParseError, ValidationError
from .feedback import FeedbackScheme, Variant
from .model import SystemParams

VARIANT_ALIASES = {
    "none": Variant.NONE, "jz": Variant.JZ, "omega1": Variant.OMEGA1, "mirror": Variant.MIRROR,
    "jzpyragas": Variant.JZ, "omega1pyragas": Variant.OMEGA1, "mirrorpyragas": Variant.MIRROR,
}
TAU_MODES = ("absolute", "multiples_of_2pi_over_omega")
FRAMES = ("lab", "rotating")
SPACINGS = ("linear", "log")
GRID_AXES = ("g", "kappa", "tau", "lambda", "n1", "n2")


@dataclass(frozen=True)
class SchemeBlock:
    variant: str = "none"
    lam: float = 0.0
    tau: float = 1.0
    tau_mode: str = "absolute"
    target: str = "n2"

    def feedback(self, omega_target: float | None = None) -> FeedbackScheme:
        v = VARIANT_ALIASES[self.variant]
        if v == Variant.NONE:
            return FeedbackScheme()
        tau = self.tau
        if self.tau_mode == "multiples_of_2pi_over_omega":
            if not omega_target:
                raise ValidationError("tau_mode needs a rotating target fixed point", field="tau_mode")
            tau = self.tau * 2 * math.pi / abs(omega_target)
        return FeedbackScheme(v, self.lam, tau)


@dataclass(frozen=True)
class RunBlock:
    dt: float = 1e-3
    T: float = 1000.0
    T_max: float = 20000.0
    window: float = 200.0
    tol_fp: float = 1e-6
    tol_cycle: float = 0.1
    eps_stab: float = 1e-8
    save_every: int = 10
    warmup: float = 0.0
    frame: str = "lab"
    n_cheb: int = 24


@dataclass(frozen=True)
class InitialBlock:
    n1: float = 0.1
    n2: float = 0.1
    phase1: float = 0.0
    phase2: float = 0.0
    jpm: float = 0.185
    jz: float = 0.076

    @property
    def atomic(self) -> tuple:
        return (self.jpm, self.jpm, self.jz)


@dataclass(frozen=True)
class GridAxis:
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


DEFAULT_GRIDS = {
    "g": GridAxis(0.05, 6.0, 201),
    "kappa": GridAxis(0.001, 1.0, 201, "log"),
    "tau": GridAxis(0.06, 6.0, 100),
    "lambda": GridAxis(0.0, 1.0, 101),
    "n1": GridAxis(0.0, 10.0, 11),
    "n2": GridAxis(0.0, 10.0, 11),
}


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams = SystemParams()
    scheme: SchemeBlock = SchemeBlock()
    run: RunBlock = RunBlock()
    initial: InitialBlock = InitialBlock()
    grids: dict = field(default_factory=lambda: dict(DEFAULT_GRIDS))
    warnings: tuple = field(default=(), compare=False)

    def grid(self, axis: str) -> np.ndarray:
        return self.grids[axis].values()


# key name in the file -> dataclass attribute
_SCHEME_KEYS = {"variant": "variant", "lambda": "lam", "tau": "tau", "tau_mode": "tau_mode",
                "target": "target"}
_STR_FIELDS = {"inversion", "variant", "tau_mode", "target", "frame", "spacing"}
_INT_FIELDS = {"save_every", "n_cheb", "count"}
_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.]+)\s*\]$")


def _section_fields(section: str) -> dict:
    """Mapping of allowed keys to attribute names for a section."""
    if section == "params":
        return {f.name: f.name for f in fields(SystemParams)}
    if section == "scheme":
        return dict(_SCHEME_KEYS)
    if section == "run":
        return {f.name: f.name for f in fields(RunBlock)}
    if section == "initial":
        return {f.name: f.name for f in fields(InitialBlock)}
    if section.startswith("grid.") and section[5:] in GRID_AXES:
        return {f.name: f.name for f in fields(GridAxis)}
    return {}


def _convert(key: str, raw: str, line: int):
    if key in _STR_FIELDS:
        if not re.fullmatch(r"[A-Za-z0-9_.+-]+", raw):
            raise ParseError(f"malformed value {raw!r} for {key}", line)
        return raw
    try:
        if key in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ParseError(f"malformed value {raw!r} for {key}", line) from None


def read_raw(text: str) -> dict:
    """Parse text into {section: {key: (value_string, line)}} without validation."""
    raw: dict = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = _SECTION.match(s)
        if m:
            section = m.group(1)
            if not _section_fields(section):
                raise ValidationError(f"unknown section [{section}] (line {n})", field=section)
            raw.setdefault(section, {})
            continue
        m = _LINE.match(s)
        if not m or "=" in m.group(2) or not m.group(2):
            raise ParseError(f"expected 'key = value', got {s!r}", n)
        if section is None:
            raise ParseError("key outside of any [section]", n)
        key, value = m.group(1), m.group(2)
        if key not in _section_fields(section):
            raise ValidationError(f"unknown key {key!r} in [{section}] (line {n})",
                                  field=f"{section}.{key}")
        if key in raw[section]:
            raise ParseError(f"duplicate key {key!r}", n)
        raw[section][key] = (value, n)
    return raw


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply `--set` style overrides: section.key=value, or an unambiguous bare key."""
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} must look like key=value", field=item)
        path, value = item.split("=", 1)
        path, value = path.strip(), value.strip()
        if "." in path:
            section, key = path.rsplit(".", 1)
        else:
            owners = [s for s in ("params", "scheme", "run", "initial") if path in _section_fields(s)]
            if len(owners) != 1:
                raise ValidationError(f"override key {path!r} is unknown or ambiguous", field=path)
            section, key = owners[0], path
        allowed = _section_fields(section)
        if key not in allowed:
            raise ValidationError(f"unknown override {path!r}", field=path)
        raw.setdefault(section, {})[key] = (value, 0)
    return raw


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    s, r = cfg.scheme, cfg.run
    if s.variant.lower() not in VARIANT_ALIASES:
        raise ValidationError(f"unknown scheme variant {s.variant!r}", field="scheme.variant")
    if s.tau_mode not in TAU_MODES:
        raise ValidationError(f"tau_mode must be one of {TAU_MODES}", field="scheme.tau_mode")
    if not (s.target in ("n1", "n2") or s.target.isdigit()):
        raise ValidationError("target must be n1, n2 or a fixed-point index", field="scheme.target")
    if not (s.tau > 0 and math.isfinite(s.tau)):
        raise ValidationError("tau must be positive", field="scheme.tau")
    if not math.isfinite(s.lam):
        raise ValidationError("lambda must be finite", field="scheme.lambda")
    for name in ("dt", "T", "T_max", "window", "tol_fp", "tol_cycle", "eps_stab"):
        v = getattr(r, name)
        if not (v > 0 and math.isfinite(v)):
            raise ValidationError(f"{name} must be positive", field=f"run.{name}")
    if r.warmup < 0:
        raise ValidationError("warmup must be >= 0", field="run.warmup")
    if r.save_every < 1 or r.n_cheb < 2:
        raise ValidationError("save_every >= 1 and n_cheb >= 2 required", field="run")
    if r.frame not in FRAMES:
        raise ValidationError(f"frame must be one of {FRAMES}", field="run.frame")
    i = cfg.initial
    if i.n1 < 0 or i.n2 < 0:
        raise ValidationError("initial populations must be >= 0", field="initial")
    for axis, gax in cfg.grids.items():
        if gax.count < 1 or gax.spacing not in SPACINGS or not gax.min <= gax.max:
            raise ValidationError(f"invalid grid axis {axis}", field=f"grid.{axis}")
        if gax.spacing == "log" and gax.min <= 0:
            raise ValidationError("log-spaced grid needs min > 0", field=f"grid.{axis}")
    return cfg


def build_config(raw: dict) -> ExperimentConfig:
    def block(cls, section, default):
        vals = {}
        for key, (value, line) in raw.get(section, {}).items():
            vals[_section_fields(section)[key]] = _convert(key, value, line)
        return replace(default, **vals) if vals else default

    try:
        params = SystemParams(**{k: _convert(k, v, ln) for k, (v, ln) in raw.get("params", {}).items()})
    except ValidationError as exc:
        field_name = f"params.{exc.field}" if getattr(exc, "field", None) else "params"
        if isinstance(exc, ParseError):
            raise
        raise ValidationError(str(exc), field=field_name) from exc
    scheme = block(SchemeBlock, "scheme", SchemeBlock())
    scheme = replace(scheme, variant=scheme.variant.lower())
    run = block(RunBlock, "run", RunBlock())
    initial = block(InitialBlock, "initial", InitialBlock())
    grids = dict(DEFAULT_GRIDS)
    for section in raw:
        if section.startswith("grid."):
            axis = section[5:]
            grids[axis] = block(GridAxis, section, DEFAULT_GRIDS[axis])
    warn = []
    if params.z0 <= 0:
        warn.append(f"z0 = {params.z0:.6g} <= 0: absorbing medium, no lasing possible")
    return _validate(ExperimentConfig(params, scheme, run, initial, grids, tuple(warn)))


def parse_config(text: str, overrides: list[str] | None = None) -> ExperimentConfig:
    return build_config(apply_overrides(read_raw(text), overrides or []))


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    lines = ["[params]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.params, f.name))}" for f in fields(SystemParams)]
    lines += ["", "[scheme]"]
    lines += [f"{k} = {_fmt(getattr(cfg.scheme, a))}" for k, a in _SCHEME_KEYS.items()]
    for name, obj in (("run", cfg.run), ("initial", cfg.initial)):
        lines += ["", f"[{name}]"]
        lines += [f"{f.name} = {_fmt(getattr(obj, f.name))}" for f in fields(obj)]
    for axis in GRID_AXES:
        gax = cfg.grids[axis]
        lines += ["", f"[grid.{axis}]"]
        lines += [f"{f.name} = {_fmt(getattr(gax, f.name))}" for f in fields(GridAxis)]
    return "\n".join(lines) + "\n"
