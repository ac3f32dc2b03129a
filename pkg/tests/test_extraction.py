import math

import numpy as np
import pytest

from sramflip import (CellParams, Equilibria, NonMonotoneError, NotConvergedError, StatePoint, embed,
                      extract_drift, find_equilibria, make_axis, project, quasi_potential, relax_trajectory)
from sramflip.extraction import (DriftTable, Trajectory, extend_negative, extract_cell, read_tables_csv,
                                 sigma_vv_of, write_tables_csv)


def _synthetic_axis():
    s0, sm = (0.01, 0.19), (0.05, 0.15)
    d = math.hypot(sm[0] - s0[0], sm[1] - s0[1])
    eq = Equilibria(StatePoint(*s0), StatePoint(*sm), StatePoint(0.19, 0.01),
                    ((sm[0] - s0[0]) / d, (sm[1] - s0[1]) / d), d)
    return make_axis(eq, 0.2)


def test_recovers_tau_from_linear_relaxation():
    axis = _synthetic_axis()
    tau0 = 10e-9
    t = np.arange(0.0, 20 * tau0, tau0 / 200)
    vv = 0.999 * axis.delta_vv * np.exp(-t / tau0)
    st = np.column_stack(embed(vv, axis))
    table = extract_drift(Trajectory(t, st, {"epsilon": 1e-3 * axis.delta_vv, "dt": tau0 / 200}), axis)
    assert table.tau == pytest.approx(tau0, rel=0.01)
    assert table.h[0] == 0.0 and table.h[-1] == 0.0
    assert table.vv[0] == 0.0 and table.vv[-1] == axis.delta_vv
    inner = slice(1, -1)
    assert np.allclose(table.h[inner], -table.vv[inner] / tau0, rtol=1e-4)


def test_non_monotone_trajectory_rejected():
    axis = _synthetic_axis()
    t = np.linspace(0, 1e-8, 100)
    vv = axis.delta_vv * (0.5 + 0.4 * np.cos(t / 1e-9))
    with pytest.raises(NonMonotoneError):
        extract_drift(Trajectory(t, np.column_stack(embed(vv, axis))), axis)


def test_relaxation_reaches_stable_point(default_params):
    eq = find_equilibria(default_params)
    traj = relax_trajectory(default_params, eq)
    end = traj.states[-1]
    assert math.hypot(end[0] - eq.stable0.v2, end[1] - eq.stable0.v1) < 1e-6 * eq.delta_vv
    assert traj.meta["epsilon"] == pytest.approx(1e-3 * eq.delta_vv)


def test_start_at_saddle_stays_put(default_params):
    eq = find_equilibria(default_params)
    with pytest.raises(NotConvergedError) as info:
        relax_trajectory(default_params, eq, epsilon=0.0, t_max=100 * default_params.tau_node)
    states = info.value.trajectory.states
    assert np.max(np.abs(states - np.array(eq.saddle))) < 1e-15


def test_monotone_projection_with_offset(default_params):
    p = default_params.with_offset(0.02)
    eq = find_equilibria(p)
    traj = relax_trajectory(p, eq)
    vv = project((traj.states[:, 0], traj.states[:, 1]), make_axis(eq, p.vdd))
    assert np.all(np.diff(vv) < 0)


def test_drift_table_invariants(desk_cell):
    p, eq, axis, drift, pot = desk_cell
    pos = drift.vv >= 0
    vv, h = drift.vv[pos], drift.h[pos]
    assert vv[0] == 0.0 and h[0] == 0.0
    assert vv[-1] == eq.delta_vv and h[-1] == 0.0
    assert np.all(h[1:-1] < 0)
    assert drift.tau > 0
    assert np.all(np.diff(drift.vv) > 0)


def test_potential_invariants(desk_cell):
    *_, drift, pot = desk_cell
    pos = pot.vv >= 0
    assert pot.u[pos][0] == 0.0
    assert np.all(np.diff(pot.u[pos]) >= 0)
    assert pot.barrier > 0
    assert pot.barrier < pot.parabolic_barrier


def test_potential_derivative_recovers_drift(desk_cell):
    *_, drift, pot = desk_cell
    g = -np.gradient(pot.u, pot.vv)
    inner = slice(1, -1)
    rms_err = np.sqrt(np.mean((g[inner] - drift.h[inner]) ** 2))
    assert rms_err < 0.01 * np.sqrt(np.mean(drift.h[inner] ** 2))


def test_linear_regime_tangent(desk_cell):
    *_, drift, _ = desk_cell
    sel = (drift.vv > 0) & (drift.vv < 0.05 * drift.delta_vv)
    lin = drift.vv[sel] / drift.tau
    assert np.all(np.abs(drift.h[sel] + lin) < 0.05 * lin)


def test_grid_refinement_stability():
    p = CellParams().with_offset(0.042)
    _, _, d1, u1 = extract_cell(p, extend=None)
    _, _, d2, u2 = extract_cell(p, extend=None, dt=p.tau_node / 400)
    assert d2.tau == pytest.approx(d1.tau, rel=0.005)
    assert u2.barrier == pytest.approx(u1.barrier, rel=0.005)


def test_quasi_potential_of_linear_drift():
    tau, delta = 1e-9, 0.05
    vv = np.linspace(0, delta, 200)
    pot = quasi_potential(DriftTable(vv, -vv / tau, tau, delta))
    assert pot.barrier == pytest.approx(delta ** 2 / (2 * tau), rel=1e-3)
    assert pot.parabolic_barrier == pytest.approx(delta ** 2 / (2 * tau))


def test_quasi_potential_of_zero_drift():
    vv = np.linspace(0, 0.05, 50)
    pot = quasi_potential(DriftTable(vv, np.zeros_like(vv), 1e-9, 0.05))
    assert np.all(pot.u == 0.0)


def test_harmonic_extension(desk_cell):
    p, eq, axis, drift, pot = desk_cell
    base = drift.__class__(drift.vv[drift.vv >= 0], drift.h[drift.vv >= 0], drift.tau, drift.delta_vv, {})
    ext = extend_negative(base, p, eq, method="harmonic")
    neg = ext.vv < 0
    assert np.allclose(ext.h[neg], -ext.vv[neg] / ext.tau, rtol=1e-15)
    assert ext.vv[0] == pytest.approx(-10 * sigma_vv_of(p, drift.tau), rel=1e-12)
    assert ext.meta["negative_extension"] == "harmonic"


def test_extension_continuous_at_zero(desk_cell):
    *_, drift, _ = desk_cell
    i0 = int(np.searchsorted(drift.vv, 0.0))
    assert drift.vv[i0] == 0.0
    # neighbours on both sides approach h(0) = 0
    left, right = drift.h[i0 - 1], drift.h[i0 + 1]
    scale = np.max(np.abs(drift.h))
    assert abs(left - right) < 1e-3 * scale
    assert drift.h[i0] == 0.0


def test_trajectory_and_harmonic_extensions_agree_near_equilibrium(default_params):
    eq = find_equilibria(default_params)
    _, _, drift, _ = extract_cell(default_params, eq)
    assert drift.meta["negative_extension"] == "trajectory"
    s = sigma_vv_of(default_params, drift.tau)
    sel = (drift.vv < 0) & (drift.vv > -2 * s)
    harmonic = -drift.vv[sel] / drift.tau
    assert np.all(np.abs(drift.h[sel] - harmonic) < 0.10 * np.abs(harmonic))


def test_tables_csv_round_trip(tmp_path, desk_cell):
    p, eq, axis, drift, pot = desk_cell
    path = tmp_path / "drift.csv"
    write_tables_csv(path, drift, pot)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# params_hash=" + p.digest())
    assert "epsilon=" in lines[0] and "dt=" in lines[0]
    assert lines[1] == "vv_mV,h_mV_per_us,U_V2_per_s"
    d2, u2 = read_tables_csv(path)
    assert np.allclose(d2.vv, drift.vv, rtol=1e-15, atol=0)
    assert np.allclose(d2.h, drift.h, rtol=1e-15, atol=0)
    assert d2.tau == drift.tau and d2.delta_vv == drift.delta_vv
    assert u2.barrier == pytest.approx(pot.barrier, rel=1e-14)
