"""Run configuration: flat ``section.key = value`` text with SI-suffixed numbers.

Example::

    # desk-scale sweep
    cell.c = 50 aF
    sweep.dv_start = 38 mV
    sweep.dv_stop = 46 mV
    sweep.dv_step = 2 mV
    mc.n_paths = 10000
    estimators.methods = kish, nobile, siegert, mc-1d, mc-2d
"""

from __future__ import annotations

import dataclasses
import math
import re
from decimal import Decimal
from dataclasses import dataclass, field

from .circuit import CellParams
from .errors import InvalidParamsError, ParseError, ValidationError
from .estimators import METHODS

# decimal exponents, so "50 aF" parses to the same float as "5e-17"
_PREFIX = {"a": -18, "f": -15, "p": -12, "n": -9, "u": -6, "µ": -6, "μ": -6,
           "m": -3, "": 0, "k": 3, "M": 6, "G": 9, "T": 12}
_UNIT_ALIASES = {"Ω": "Ohm", "ohm": "Ohm", "Ohm": "Ohm", "ohms": "Ohm"}
_NUMBER = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)$")


@dataclass(frozen=True)
class SweepSpec:
    dv_start: float = 0.038
    dv_stop: float = 0.046
    dv_step: float = 0.002

    def points(self) -> list[float]:
        count = int(math.floor((self.dv_stop - self.dv_start) / self.dv_step + 1e-9)) + 1
        return [self.dv_start + k * self.dv_step for k in range(count)]


@dataclass(frozen=True)
class McSpec:
    n_paths: int = 10000
    n_paths_2d: int = 200
    base_seed: int = 20240601
    t_max: float = 50e-6
    fmax: float = 20e9
    horizon_1d_tau: float = 1e4
    dt_1d_per_tau: float = 200.0


@dataclass(frozen=True)
class RunConfig:
    cell: CellParams = field(default_factory=CellParams)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    mc: McSpec = field(default_factory=McSpec)
    estimators: tuple = METHODS
    output: str = "sweep_out"
    workers: int = 1

    def echo(self) -> str:
        """Every effective value, one ``section.key = value`` per line, in SI units."""
        lines = []
        for name, value in dataclasses.asdict(self.cell).items():
            lines.append(f"cell.{name} = {value!r}")
        for name, value in dataclasses.asdict(self.sweep).items():
            lines.append(f"sweep.{name} = {value!r}")
        for name, value in dataclasses.asdict(self.mc).items():
            lines.append(f"mc.{name} = {value!r}")
        lines.append(f"estimators.methods = {', '.join(self.estimators)}")
        lines.append(f"output.dir = {self.output}")
        lines.append(f"run.workers = {self.workers}")
        return "\n".join(lines) + "\n"


# key -> (base unit or None for plain numbers, kind)
_SCHEMA = {
    "cell.vdd": ("V", float), "cell.vm": ("V", float), "cell.vs": ("V", float),
    "cell.r": ("Ohm", float), "cell.c": ("F", float), "cell.temp": ("K", float),
    "cell.dv1": ("V", float), "cell.dv2": ("V", float), "cell.noise_scale": (None, float),
    "sweep.dv_start": ("V", float), "sweep.dv_stop": ("V", float), "sweep.dv_step": ("V", float),
    "mc.n_paths": (None, int), "mc.n_paths_2d": (None, int), "mc.base_seed": (None, int),
    "mc.t_max": ("s", float), "mc.fmax": ("Hz", float), "mc.horizon_1d_tau": (None, float),
    "mc.dt_1d_per_tau": (None, float),
    "estimators.methods": (None, "list"), "output.dir": (None, str), "run.workers": (None, int),
}


def parse_quantity(text: str, unit: str | None) -> float:
    """Parse ``"200 mV"``, ``"10MΩ"``, ``"1e-9"`` ... into SI units.

    Raises ValueError when the suffix does not match ``unit``.
    """
    m = _NUMBER.match(text.strip())
    if not m:
        raise ValueError(f"not a number: {text!r}")
    value = float(m.group(1))
    suffix = m.group(2)
    if not suffix:
        return value
    if unit is None:
        raise ValueError(f"unexpected unit suffix {suffix!r}")
    for base in sorted({unit, *[k for k, v in _UNIT_ALIASES.items() if v == unit]}, key=len, reverse=True):
        if suffix.endswith(base):
            prefix = suffix[: -len(base)]
            if prefix in _PREFIX:
                return float(Decimal(m.group(1)).scaleb(_PREFIX[prefix]))
    raise ValueError(f"unit {suffix!r} is not a multiple of {unit}")


def _coerce(key, raw, lineno):
    unit, kind = _SCHEMA[key]
    try:
        if kind == "list":
            return tuple(t.strip() for t in raw.split(",") if t.strip())
        if kind is str:
            return raw.strip()
        if kind is int:
            value = parse_quantity(raw, unit)
            if value != int(value):
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(value)
        return parse_quantity(raw, unit)
    except ValueError as exc:
        raise ParseError(f"{key}: {exc}", lineno) from None


def parse_config_text(text: str) -> dict:
    """Raw ``{key: value}`` mapping from config text, with line-aware errors."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'section.key = value', got {stripped!r}", lineno)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        values[key] = _coerce(key, raw, lineno)
    return values


def load_config(text: str) -> RunConfig:
    """Parse and validate a run configuration, filling defaults."""
    values = parse_config_text(text)
    sections = {"cell": {}, "sweep": {}, "mc": {}}
    for key, value in values.items():
        section, name = key.split(".", 1)
        if section in sections:
            sections[section][name] = value
    try:
        cell = CellParams(**sections["cell"])
    except InvalidParamsError as exc:
        field_name = str(exc).split(" ", 1)[0]
        raise ValidationError(f"cell.{field_name}" if field_name in CellParams.__dataclass_fields__ else "cell",
                              str(exc)) from None
    sweep = SweepSpec(**sections["sweep"])
    if not sweep.dv_step > 0:
        raise ValidationError("sweep.dv_step", f"must be > 0, got {sweep.dv_step!r}")
    if sweep.dv_start > sweep.dv_stop:
        raise ValidationError("sweep.dv_start", "must not exceed sweep.dv_stop")
    mc = McSpec(**sections["mc"])
    for name in ("n_paths", "n_paths_2d"):
        if getattr(mc, name) < 1:
            raise ValidationError(f"mc.{name}", "must be >= 1")
    for name in ("t_max", "fmax", "horizon_1d_tau"):
        if not getattr(mc, name) > 0:
            raise ValidationError(f"mc.{name}", "must be > 0")
    if mc.dt_1d_per_tau < 100:
        raise ValidationError("mc.dt_1d_per_tau", "must be >= 100 (dt <= tau/100)")
    methods = values.get("estimators.methods", METHODS)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValidationError("estimators.methods",
                              f"unknown tag(s) {', '.join(unknown)}; valid tags: {', '.join(METHODS)}")
    workers = values.get("run.workers", 1)
    if workers < 1:
        raise ValidationError("run.workers", "must be >= 1")
    return RunConfig(cell, sweep, mc, tuple(methods), values.get("output.dir", "sweep_out"), workers)
