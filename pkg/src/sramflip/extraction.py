"""Drift and quasi-potential of the reduced 1D model from a noiseless relaxation.

A trajectory is started just below the saddle on the projection axis and
integrated back to the threatened stable state.  Its projected coordinate
vv(t) is differentiated numerically and the pairs (vv, dvv/dt) form the
tabulated drift h(vv).  Integrating -h gives the quasi-potential U(vv).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .circuit import CellParams, Equilibria, StatePoint, node_noise_sigma
from .errors import NonMonotoneError, NotConvergedError
from .projection import ProjectionAxis, embed, make_axis, project

DEFAULT_EPSILON_REL = 1e-3
DEFAULT_STOP_REL = 1e-6
DT_PER_TAU_NODE = 200
NEGATIVE_SPAN_SIGMAS = 10.0


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n, 2), columns (v2, v1)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) < 3:
            raise ValueError("trajectory needs >= 3 samples with matching times/states")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


@dataclass(frozen=True)
class DriftTable:
    vv: np.ndarray
    h: np.ndarray
    tau: float
    delta_vv: float
    meta: dict = field(default_factory=dict)

    def __call__(self, v):
        """Piecewise-linear drift h(v)."""
        return np.interp(v, self.vv, self.h)

    @property
    def vv_min(self) -> float:
        return float(self.vv[0])


@dataclass(frozen=True)
class PotentialTable:
    vv: np.ndarray
    u: np.ndarray
    barrier: float
    delta_vv: float
    tau: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def parabolic_barrier(self) -> float:
        """Barrier of the harmonic approximation, delta_vv**2 / (2 tau)."""
        return self.delta_vv ** 2 / (2.0 * self.tau)


def _rk4(p: CellParams, start, dt, t_max, stop_point, eps_stop):
    # scalar RK4 on the 2D field; math.tanh keeps this loop cheap
    rc = p.r * p.c
    half_vdd, vm, vs = 0.5 * p.vdd, p.vm, p.vs
    d1, d2 = p.dv1, p.dv2
    tanh = math.tanh

    def f(v2, v1):
        return ((half_vdd * (1.0 - tanh((v1 + d2 - vm) / vs)) - v2) / rc,
                (half_vdd * (1.0 - tanh((v2 + d1 - vm) / vs)) - v1) / rc)

    v2, v1 = float(start[0]), float(start[1])
    x0, y0 = stop_point
    n_max = int(math.ceil(t_max / dt))
    out = [(v2, v1)]
    converged = False
    for _ in range(n_max):
        k1 = f(v2, v1)
        k2 = f(v2 + 0.5 * dt * k1[0], v1 + 0.5 * dt * k1[1])
        k3 = f(v2 + 0.5 * dt * k2[0], v1 + 0.5 * dt * k2[1])
        k4 = f(v2 + dt * k3[0], v1 + dt * k3[1])
        v2 += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        v1 += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        out.append((v2, v1))
        if math.hypot(v2 - x0, v1 - y0) < eps_stop:
            converged = True
            break
    states = np.array(out)
    times = dt * np.arange(len(states))
    return times, states, converged


def relax_trajectory(p: CellParams, eq: Equilibria, epsilon: float | None = None,
                     dt: float | None = None, t_max: float | None = None,
                     eps_stop: float | None = None, start_vv: float | None = None) -> Trajectory:
    """Noiseless relaxation toward ``eq.stable0``.

    Starts on the projection axis at ``delta_vv - epsilon`` unless
    ``start_vv`` is given.  Defaults: ``epsilon = 1e-3*delta_vv``,
    ``dt = r*c/200``, stop radius ``1e-6*delta_vv``, ``t_max = 1e4*r*c``.

    Raises :class:`NotConvergedError` (carrying the trajectory) if the stop
    radius is not reached within ``t_max``.
    """
    axis = make_axis(eq, p.vdd)
    if epsilon is None:
        epsilon = DEFAULT_EPSILON_REL * eq.delta_vv
    if dt is None:
        dt = p.tau_node / DT_PER_TAU_NODE
    if t_max is None:
        t_max = 1e4 * p.tau_node
    if eps_stop is None:
        eps_stop = DEFAULT_STOP_REL * eq.delta_vv
    vv0 = eq.delta_vv - epsilon if start_vv is None else start_vv
    times, states, converged = _rk4(p, embed(vv0, axis), dt, t_max, eq.stable0, eps_stop)
    traj = Trajectory(times, states, {"epsilon": epsilon, "dt": dt, "start_vv": vv0,
                                      "eps_stop": eps_stop, "converged": converged})
    if not converged:
        raise NotConvergedError(f"relaxation did not reach stable point within t_max={t_max:.3g} s", traj)
    return traj


def _central_rates(times, vv):
    return (vv[2:] - vv[:-2]) / (times[2:] - times[:-2])


def fit_tau(times, vv, delta_vv, upper=0.1):
    """Time constant from a log-linear least-squares fit of the tail vv < upper*delta_vv."""
    sel = (vv > 0) & (vv < upper * delta_vv)
    if np.count_nonzero(sel) < 3:
        raise NonMonotoneError("too few tail samples to fit the relaxation time constant")
    slope = np.polyfit(times[sel], np.log(vv[sel]), 1)[0]
    if slope >= 0:
        raise NonMonotoneError("relaxation tail does not decay")
    return -1.0 / slope


def extract_drift(traj: Trajectory, axis: ProjectionAxis) -> DriftTable:
    """Tabulate h(vv) on [0, delta_vv] from a relaxation trajectory.

    Raises :class:`NonMonotoneError` if vv(t) is not strictly decreasing.
    """
    times = np.asarray(traj.times, dtype=float)
    vv = project((traj.states[:, 0], traj.states[:, 1]), axis)
    if np.any(np.diff(vv) >= 0):
        raise NonMonotoneError("vv(t) is not strictly decreasing along the relaxation")
    delta = axis.delta_vv
    rates = _central_rates(times, vv)
    inner = vv[1:-1]
    keep = (inner > 0) & (inner < delta)
    order = np.argsort(inner[keep])
    table_vv = np.concatenate(([0.0], inner[keep][order], [delta]))
    table_h = np.concatenate(([0.0], rates[keep][order], [0.0]))
    tau = fit_tau(times, vv, delta)
    meta = dict(traj.meta)
    meta["n_samples"] = len(times)
    return DriftTable(table_vv, table_h, tau, delta, meta)


def quasi_potential(d: DriftTable) -> PotentialTable:
    """U(vv) = -integral_0^vv h, trapezoidal on the table grid."""
    u = -cumulative_trapezoid(d.h, d.vv, initial=0.0)
    i0 = int(np.searchsorted(d.vv, 0.0))
    if i0 >= len(d.vv) or d.vv[i0] != 0.0:
        u = u - np.interp(0.0, d.vv, u)
    else:
        u = u - u[i0]
    barrier = float(np.interp(d.delta_vv, d.vv, u))
    return PotentialTable(d.vv.copy(), u, barrier, d.delta_vv, d.tau, dict(d.meta))


def sigma_vv_of(p: CellParams, tau: float) -> float:
    """Stationary spread of vv implied by sigma_w**2 = 2 sigma_vv**2 / tau."""
    return node_noise_sigma(p) * math.sqrt(tau / 2.0)


def harmonic_extension(d: DriftTable, span: float, n: int = 201) -> DriftTable:
    """Prepend h(vv) = -vv/tau on [-span, 0)."""
    neg = np.linspace(-span, 0.0, n)[:-1]
    meta = dict(d.meta)
    meta["negative_extension"] = "harmonic"
    meta["negative_span"] = span
    return DriftTable(np.concatenate((neg, d.vv)), np.concatenate((-neg / d.tau, d.h)),
                      d.tau, d.delta_vv, meta)


def trajectory_extension(d: DriftTable, p: CellParams, eq: Equilibria, span: float) -> DriftTable:
    """Prepend drift samples on [-span, 0) from a relaxation started at embed(-span)."""
    axis = make_axis(eq, p.vdd)
    traj = relax_trajectory(p, eq, start_vv=-span, eps_stop=DEFAULT_STOP_REL * eq.delta_vv)
    times = traj.times
    vv = project((traj.states[:, 0], traj.states[:, 1]), axis)
    if np.any(np.diff(vv) <= 0):
        raise NonMonotoneError("vv(t) is not strictly increasing below the stable point")
    rates = np.gradient(vv, times, edge_order=2)
    keep = vv < 0
    neg_vv = vv[keep]
    neg_h = rates[keep]
    # the start sits exactly at -span; force the table edge there
    neg_vv[0] = -span
    meta = dict(d.meta)
    meta["negative_extension"] = "trajectory"
    meta["negative_span"] = span
    return DriftTable(np.concatenate((neg_vv, d.vv)), np.concatenate((neg_h, d.h)),
                      d.tau, d.delta_vv, meta)


def extend_negative(d: DriftTable, p: CellParams, eq: Equilibria, method: str = "trajectory",
                    span: float | None = None) -> DriftTable:
    """Extend the drift table below the stable point down to ``-10*sigma_vv``.

    ``method="trajectory"`` extracts the branch from a second relaxation and
    falls back to the harmonic form if that relaxation is unusable; the
    method actually used is stored in ``meta["negative_extension"]``.
    """
    if span is None:
        sigma_vv = sigma_vv_of(p, d.tau)
        span = NEGATIVE_SPAN_SIGMAS * sigma_vv if sigma_vv > 0 else d.delta_vv
    if method == "harmonic":
        return harmonic_extension(d, span)
    if method != "trajectory":
        raise ValueError(f"unknown extension method {method!r}")
    try:
        return trajectory_extension(d, p, eq, span)
    except (NonMonotoneError, NotConvergedError) as exc:
        ext = harmonic_extension(d, span)
        ext.meta["extension_fallback_reason"] = str(exc)
        return ext


def extract_cell(p: CellParams, eq: Equilibria | None = None, *, extend: str | None = "trajectory",
                 dt: float | None = None, epsilon: float | None = None):
    """Run relax -> extract -> (extend) -> potential for one cell.

    Returns ``(equilibria, axis, drift_table, potential_table)``.
    """
    from .circuit import find_equilibria

    if eq is None:
        eq = find_equilibria(p)
    axis = make_axis(eq, p.vdd)
    traj = relax_trajectory(p, eq, epsilon=epsilon, dt=dt)
    drift = extract_drift(traj, axis)
    if extend is not None:
        drift = extend_negative(drift, p, eq, method=extend)
    drift = dataclasses.replace(drift, meta={**drift.meta, "params_hash": p.digest()})
    return eq, axis, drift, quasi_potential(drift)


def write_tables_csv(path, drift: DriftTable, potential: PotentialTable) -> None:
    """Write ``vv_mV, h_mV_per_us, U_V2_per_s`` with a one-line provenance header."""
    meta = drift.meta
    header = (f"# params_hash={meta.get('params_hash', '')} epsilon={meta.get('epsilon', float('nan')):.17g}"
              f" dt={meta.get('dt', float('nan')):.17g} tau={drift.tau:.17g} delta_vv={drift.delta_vv:.17g}"
              f" negative_extension={meta.get('negative_extension', 'none')}")
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write("vv_mV,h_mV_per_us,U_V2_per_s\n")
        u = np.interp(drift.vv, potential.vv, potential.u)
        for v, h, uu in zip(drift.vv, drift.h, u):
            fh.write(f"{v * 1e3:.17g},{h * 1e-3:.17g},{uu:.17g}\n")


def read_tables_csv(path) -> tuple[DriftTable, PotentialTable]:
    """Inverse of :func:`write_tables_csv`."""
    with open(path) as fh:
        header = fh.readline()
    meta = {}
    for token in header.lstrip("#").split():
        key, _, value = token.partition("=")
        meta[key] = value
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    vv = data[:, 0] * 1e-3
    h = data[:, 1] * 1e3
    u = data[:, 2]
    tau = float(meta.pop("tau"))
    delta = float(meta.pop("delta_vv"))
    for key in ("epsilon", "dt"):
        if key in meta:
            meta[key] = float(meta[key])
    drift = DriftTable(vv, h, tau, delta, meta)
    barrier = float(np.interp(delta, vv, u))
    return drift, PotentialTable(vv, u, barrier, delta, tau, dict(meta))
