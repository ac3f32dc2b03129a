"""Straight-line reaction coordinate from the threatened stable state to the saddle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Equilibria, StatePoint
from .errors import DegenerateAxisError

_DEGENERATE_REL = 1e-9


@dataclass(frozen=True)
class ProjectionAxis:
    origin: StatePoint
    unit: tuple[float, float]
    delta_vv: float

    @property
    def normal(self) -> tuple[float, float]:
        a, b = self.unit
        return (-b, a)


def make_axis(eq: Equilibria, vdd: float | None = None) -> ProjectionAxis:
    """Axis through ``eq.stable0`` pointing at the saddle.

    ``vdd`` sets the scale of the degeneracy check; without it the check is
    relative to the largest node voltage of the equilibria.
    """
    scale = vdd if vdd is not None else max(abs(v) for pt in (eq.stable0, eq.saddle, eq.stable1) for v in pt)
    if eq.delta_vv < _DEGENERATE_REL * scale:
        raise DegenerateAxisError(f"delta_vv = {eq.delta_vv:.3g} V: stable point merged with saddle")
    dx = eq.saddle.v2 - eq.stable0.v2
    dy = eq.saddle.v1 - eq.stable0.v1
    norm = math.hypot(dx, dy)
    return ProjectionAxis(StatePoint(*eq.stable0), (dx / norm, dy / norm), eq.delta_vv)


def project(s, axis: ProjectionAxis):
    """Coordinate vv of state ``s = (v2, v1)``; array inputs give array outputs."""
    a, b = axis.unit
    v2, v1 = s
    return a * (np.asarray(v2) - axis.origin.v2) + b * (np.asarray(v1) - axis.origin.v1)


def embed(vv, axis: ProjectionAxis) -> StatePoint:
    """Point on the axis at coordinate ``vv``."""
    a, b = axis.unit
    return StatePoint(axis.origin.v2 + vv * a, axis.origin.v1 + vv * b)
