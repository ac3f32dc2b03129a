"""Surrogate cross-coupled inverter cell.

Two inverters with tanh-shaped transfer curves drive each other through a
node resistance ``r`` into a node capacitance ``c``.  Series offset sources
``dv1`` and ``dv2`` shift the input of each inverter.  State points are
ordered ``(v2, v1)``, i.e. (vOUT2, vOUT1), which is also the order of the
rate vector returned by :func:`drift_field`.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InvalidParamsError, MonostableError

KB = 1.380649e-23  # J/K, exact (SI 2019)

# scan of the composed transfer map used to bracket its fixed points
_SCAN_LO = -0.5
_SCAN_HI = 1.5
_SCAN_INTERVALS = 2000
_BISECT_TOL = 1e-14
EQ_RESIDUAL_TOL = 1e-12  # relative to vdd


@dataclass(frozen=True)
class CellParams:
    """Parameters of the surrogate bitcell (SI units throughout)."""

    vdd: float = 0.2
    vm: float = 0.1
    vs: float = 0.03
    r: float = 10e6
    c: float = 50e-18
    temp: float = 300.0
    dv1: float = 0.0
    dv2: float = 0.0
    noise_scale: float = 1.0

    def __post_init__(self):
        for name in ("vdd", "vm", "vs", "r", "c", "temp", "dv1", "dv2", "noise_scale"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParamsError(f"{name} must be finite, got {value!r}")
        for name in ("vdd", "vs", "r", "c", "temp"):
            if getattr(self, name) <= 0:
                raise InvalidParamsError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.noise_scale < 0:
            raise InvalidParamsError(f"noise_scale must be >= 0, got {self.noise_scale!r}")
        if self.midpoint_gain <= 1.0:
            raise InvalidParamsError(
                f"VTC midpoint gain vdd/(2*vs) = {self.midpoint_gain:.4g} must exceed 1 for bistability"
            )

    @property
    def midpoint_gain(self) -> float:
        return self.vdd / (2.0 * self.vs)

    @property
    def tau_node(self) -> float:
        """Node time constant r*c."""
        return self.r * self.c

    def with_offset(self, dv: float) -> "CellParams":
        """Worst-case offset pattern dv1 = -dv2 = dv."""
        return dataclasses.replace(self, dv1=dv, dv2=-dv)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Short stable hash of the parameter values, used as provenance tag."""
        blob = json.dumps({k: repr(float(v)) for k, v in self.as_dict().items()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


class StatePoint(NamedTuple):
    v2: float
    v1: float


@dataclass(frozen=True)
class Equilibria:
    stable0: StatePoint
    saddle: StatePoint
    stable1: StatePoint
    axis: tuple[float, float]
    delta_vv: float


def inverter_vtc(vin, p: CellParams, dv: float = 0.0):
    """Inverter output for input ``vin`` seen through a series offset ``dv``.

    Works on scalars and arrays.
    """
    return 0.5 * p.vdd * (1.0 - np.tanh((vin + dv - p.vm) / p.vs))


def drift_field(s, p: CellParams):
    """Noiseless rates ``(dv2/dt, dv1/dt)`` in V/s at state ``s = (v2, v1)``."""
    v2, v1 = s
    rc = p.r * p.c
    dv2dt = (inverter_vtc(v1, p, p.dv2) - v2) / rc
    dv1dt = (inverter_vtc(v2, p, p.dv1) - v1) / rc
    return dv2dt, dv1dt


def composed_map_residual(x, p: CellParams):
    """g(x) = vtc2(vtc1(x)) - x with x = v2; zero at every equilibrium."""
    return inverter_vtc(inverter_vtc(x, p, p.dv1), p, p.dv2) - x


def _bisect(f, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _composed_roots(p: CellParams) -> list[float]:
    k = np.arange(_SCAN_INTERVALS + 1)
    xs = p.vdd * (_SCAN_LO + (_SCAN_HI - _SCAN_LO) * k / _SCAN_INTERVALS)
    gs = composed_map_residual(xs, p)

    def g(x):
        return float(composed_map_residual(x, p))

    roots = []
    tol = _BISECT_TOL * p.vdd
    for i in range(_SCAN_INTERVALS):
        if gs[i] == 0.0:
            roots.append(float(xs[i]))
        elif gs[i + 1] != 0.0 and (gs[i] < 0.0) != (gs[i + 1] < 0.0):
            roots.append(_bisect(g, float(xs[i]), float(xs[i + 1]), float(gs[i]), tol))
    if gs[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def find_equilibria(p: CellParams) -> Equilibria:
    """Locate the two stable states and the saddle of the cell.

    Raises
    ------
    MonostableError
        If the composed transfer map has fewer than three fixed points.
    ConvergenceError
        If the scan brackets an unexpected number of roots.
    """
    roots = _composed_roots(p)
    if len(roots) < 3:
        raise MonostableError(
            f"cell is monostable at dv1={p.dv1:.6g} V, dv2={p.dv2:.6g} V ({len(roots)} fixed point(s))"
        )
    if len(roots) > 3:
        raise ConvergenceError(f"expected 3 fixed points, bracketed {len(roots)}")
    points = []
    for x in roots:
        # v1 follows from the first inverter; v2 = x closes the loop
        v1 = float(inverter_vtc(x, p, p.dv1))
        points.append(StatePoint(x, v1))
    for pt in points:
        if abs(float(composed_map_residual(pt.v2, p))) > EQ_RESIDUAL_TOL * p.vdd:
            raise ConvergenceError(f"equilibrium {pt} has residual above tolerance")
    stable0, saddle, stable1 = points
    dx = saddle.v2 - stable0.v2
    dy = saddle.v1 - stable0.v1
    delta_vv = math.hypot(dx, dy)
    if delta_vv == 0.0:
        raise ConvergenceError("stable point coincides with saddle")
    return Equilibria(stable0, saddle, stable1, (dx / delta_vv, dy / delta_vv), delta_vv)


def critical_offset(p: CellParams, tol: float = 1e-7) -> float:
    """Smallest dv (with dv1 = -dv2 = dv) at which the cell turns monostable."""
    lo, hi = 0.0, p.vdd
    try:
        find_equilibria(p.with_offset(lo))
    except MonostableError:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            find_equilibria(p.with_offset(mid))
            lo = mid
        except MonostableError:
            hi = mid
    return hi


def node_noise_sigma(p: CellParams) -> float:
    """Per-node white-noise intensity sigma_w in V/sqrt(s) (Johnson-Nyquist)."""
    return p.noise_scale * math.sqrt(2.0 * KB * p.temp / (p.r * p.c * p.c))


def thermal_sigma_vv(p: CellParams) -> float:
    """Equilibrium voltage spread sqrt(kB*T/c) of an RC node, scaled by noise_scale."""
    return p.noise_scale * math.sqrt(KB * p.temp / p.c)
