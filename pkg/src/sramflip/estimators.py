"""Closed-form and quadrature MTTF estimators for the reduced model.

``kish_mttf`` and ``nobile_mttf`` both linearize the drift around the stable
point (parabolic quasi-potential).  ``siegert_mttf`` evaluates the exact
mean first-passage double integral over a tabulated quasi-potential.  The
two near-equilibrium results and the Siegert result include the factor 2
for the even odds of falling back from the hill top.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad, trapezoid
from scipy.special import erfcx

from .errors import TruncationWarning
from .extraction import PotentialTable

METHODS = ("kish", "nobile", "siegert", "mc-1d", "mc-2d")

_LOG_MAX = math.log(np.finfo(float).max)
_TRUNCATION_REL = 1e-8
_SIEGERT_UNIFORM = 4001
_SIEGERT_TOP = 2001


@dataclass(frozen=True)
class EstimatorResult:
    mttf: float
    method: str
    inputs: dict = field(default_factory=dict)
    overflow: bool = False


def _check_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value!r}")


def kish_mttf(delta_vv: float, sigma_vv: float, tau: float) -> EstimatorResult:
    """Kish's band-limited level-crossing rate with bandwidth 1/(2*pi*tau)."""
    _check_positive(sigma_vv=sigma_vv, tau=tau)
    if delta_vv < 0:
        raise ValueError("delta_vv must be >= 0")
    log_mttf = math.log(math.sqrt(3.0) / 2.0 * 2.0 * math.pi * tau) + 0.5 * (delta_vv / sigma_vv) ** 2
    inputs = {"delta_vv": delta_vv, "sigma_vv": sigma_vv, "tau": tau,
              "sigma_w": sigma_vv * math.sqrt(2.0 / tau), "primary": ("sigma_vv", "tau")}
    if log_mttf > _LOG_MAX:
        return EstimatorResult(math.inf, "kish", inputs, overflow=True)
    return EstimatorResult(math.exp(log_mttf), "kish", inputs)


def _ou_integrand(u):
    # e^{u^2} (1 + erf u) written without cancellation
    return 2.0 * math.exp(u * u) - erfcx(u)


def ou_mean_first_passage(delta_vv: float, sigma_vv: float, tau: float) -> float:
    """Mean time for dv = -v/tau dt + sigma_w dW to go from 0 to ``delta_vv`` (no doubling)."""
    upper = delta_vv / (sigma_vv * math.sqrt(2.0))
    if upper == 0.0:
        return 0.0
    if upper * upper > _LOG_MAX - 5.0:
        return math.inf
    val, _ = quad(_ou_integrand, 0.0, upper, epsabs=0.0, epsrel=1e-10, limit=500)
    return tau * math.sqrt(math.pi) * val


def nobile_mttf(delta_vv: float, sigma_vv: float, tau: float) -> EstimatorResult:
    """Twice the Ornstein-Uhlenbeck mean first-passage time from the stable point to ``delta_vv``."""
    _check_positive(sigma_vv=sigma_vv, tau=tau)
    if delta_vv < 0:
        raise ValueError("delta_vv must be >= 0")
    t = ou_mean_first_passage(delta_vv, sigma_vv, tau)
    inputs = {"delta_vv": delta_vv, "sigma_vv": sigma_vv, "tau": tau,
              "sigma_w": sigma_vv * math.sqrt(2.0 / tau), "primary": ("sigma_vv", "tau")}
    return EstimatorResult(2.0 * t, "nobile", inputs, overflow=math.isinf(t))


def _siegert_grid(vv, lo, delta):
    uniform = np.linspace(lo, delta, _SIEGERT_UNIFORM)
    top = np.linspace(delta - 0.1 * (delta - lo), delta, _SIEGERT_TOP)
    grid = np.union1d(np.union1d(vv[(vv >= lo) & (vv <= delta)], uniform), top)
    if 0.0 > lo:
        grid = np.union1d(grid, [0.0])
    return grid


def siegert_mttf(u: PotentialTable, sigma_w: float, delta_vv: float | None = None) -> EstimatorResult:
    """Exact 1D mean first-passage time over the tabulated potential, doubled.

    Evaluates ``2 * (2/sw^2) * int_0^D exp(2U(y)/sw^2) int_lo^y exp(-2U(z)/sw^2) dz dy``
    by trapezoids on the table grid merged with a uniform grid and a finer
    grid over the top tenth of the range.  ``lo`` is the lower end of the
    table.  Emits :class:`TruncationWarning` if the inner integrand at ``lo``
    is not negligible.
    """
    _check_positive(sigma_w=sigma_w)
    delta = u.delta_vv if delta_vv is None else float(delta_vv)
    vv = np.asarray(u.vv, dtype=float)
    lo = float(vv[0])
    if lo > 0:
        raise ValueError("potential table must start at or below the stable point")
    if vv[-1] < delta * (1 - 1e-12):
        raise ValueError("potential table does not reach delta_vv")
    grid = _siegert_grid(vv, lo, delta)
    uu = np.interp(grid, vv, u.u)
    k = 2.0 / sigma_w ** 2
    inputs = {"delta_vv": delta, "sigma_w": sigma_w, "tau": u.tau,
              "sigma_vv": sigma_w * math.sqrt(u.tau / 2.0) if u.tau else None,
              "primary": ("sigma_w", "potential"), "lower_cutoff": lo}
    ku = k * uu
    ref = float(ku.min())
    if float(ku.max()) - ref > _LOG_MAX - 20.0:
        return EstimatorResult(math.inf, "siegert", inputs, overflow=True)
    inner_integrand = np.exp(-(ku - ref))
    if inner_integrand[0] > _TRUNCATION_REL * inner_integrand.max():
        warnings.warn(f"inner integrand at lower cutoff {lo:.4g} V is {inner_integrand[0]:.3g} of its peak",
                      TruncationWarning, stacklevel=2)
    inner = cumulative_trapezoid(inner_integrand, grid, initial=0.0)
    outer = np.exp(ku - ref) * inner
    sel = grid >= 0.0
    t = k * trapezoid(outer[sel], grid[sel])
    return EstimatorResult(2.0 * float(t), "siegert", inputs)
