"""End-to-end acceptance checks at desk scale.

Each check appends one PASS/FAIL line to the acceptance summary printed at
the end of the pytest run, then asserts.
"""
import math
import time

import numpy as np
import pytest

from sramflip import mttf_stats, run_ensemble
from sramflip.config import RunConfig, load_config
from sramflip.estimators import ou_mean_first_passage
from sramflip.extraction import DriftTable, read_tables_csv
from sramflip.harness import run_sweep
from sramflip.sde import SdeModel1D, Simulator1D

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

OU_RATIOS = (1.0, 2.0, 3.0)
OU_TAU = 1e-6
OU_N = 10_000


def record(number, name, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] C{number} {name}: {detail}")
    return ok


def ou_model(ratio, span=10.0):
    vv = np.linspace(-span, ratio, 4001)
    return SdeModel1D(DriftTable(vv, -vv / OU_TAU, OU_TAU, ratio), math.sqrt(2 / OU_TAU), ratio)


def ou_run(ratio, dt_div, seed=1):
    m = ou_model(ratio)
    t0 = time.perf_counter()
    est = mttf_stats(run_ensemble(Simulator1D(m, dt=OU_TAU / dt_div, t_max=1e4 * OU_TAU), OU_N, seed))
    oracle = 2 * ou_mean_first_passage(ratio, 1.0, OU_TAU)
    return est.mean - oracle, est.stderr, oracle, time.perf_counter() - t0


@pytest.fixture(scope="session")
def ou_levels():
    return {r: [ou_run(r, div) for div in (200, 400, 800)] for r in OU_RATIOS}


@pytest.fixture(scope="session")
def desk_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_sweep")
    cfg = RunConfig()
    t0 = time.perf_counter()
    report = run_sweep(cfg, str(out))
    return cfg, report, out, time.perf_counter() - t0


def test_c1_ou_oracle(ou_levels):
    ok, parts = True, []
    for r in OU_RATIOS:
        gap, se, oracle, secs = ou_levels[r][0]
        good = abs(gap) <= 3 * se and secs < 60
        ok &= good
        parts.append(f"D/s={r:g} gap={gap / oracle:+.2%} ({abs(gap) / se:.1f} SE) {secs:.1f}s")
    assert record(1, "OU oracle", ok, "; ".join(parts))


def test_c8_dt_convergence(ou_levels):
    ok, parts = True, []
    for r in OU_RATIOS:
        levels = ou_levels[r]
        for (g0, s0, *_), (g1, s1, *_) in zip(levels, levels[1:]):
            ok &= abs(g1) <= abs(g0) + 3 * math.hypot(s0, s1)
        parts.append(f"D/s={r:g} gaps/SE=" + ",".join(f"{g / s:+.1f}" for g, s, *_ in levels))
    assert record(8, "dt convergence", ok, "; ".join(parts))


def test_c2_siegert_inside_mc_ci(desk_sweep):
    _, report, _, _ = desk_sweep
    rows = report.rows[1:4]
    ok, parts = True, []
    for row in rows:
        inside = row["ci_lo_mc1d_s"] <= row["mttf_siegert_s"] <= row["ci_hi_mc1d_s"]
        ok &= inside
        parts.append(f"{row['dv_V'] * 1e3:.0f}mV siegert/mc={row['mttf_siegert_s'] / row['mttf_mc1d_s']:.4f}")
    assert record(2, "Siegert vs MC-1D", ok and len(rows) == 3, "; ".join(parts))


def test_c3_reduced_model_fidelity(desk_sweep):
    _, report, _, _ = desk_sweep
    rows = sorted(report.rows, key=lambda r: r["delta_vv_V"])
    ratios = [r["mttf_mc2d_s"] / r["mttf_mc1d_s"] for r in rows]
    ok = all(0.5 <= q <= 2.0 for q in ratios[:-1])
    detail = "mc2d/mc1d by rising Dvv = " + ", ".join(f"{q:.2f}" for q in ratios) + " (last exempt)"
    assert record(3, "MC-2D vs MC-1D", ok, detail)


def test_c4_near_equilibrium_overestimate(desk_sweep):
    _, report, _, _ = desk_sweep
    rows = sorted(report.rows, key=lambda r: r["delta_vv_V"])
    kish = [r["mttf_kish_s"] / r["mttf_mc1d_s"] for r in rows]
    nob = [r["mttf_nobile_s"] / r["mttf_mc1d_s"] for r in rows]
    ok = min(kish) > 1 and min(nob) > 1
    ok &= all(np.diff(np.log(kish)) > 0) and all(np.diff(np.log(nob)) > 0)
    ok &= kish[-1] > 10 and nob[-1] > 10
    detail = ("kish/mc1d = " + ", ".join(f"{q:.3g}" for q in kish)
              + "; nobile/mc1d = " + ", ".join(f"{q:.3g}" for q in nob))
    assert record(4, "Kish/Nobile overestimate", ok, detail)


def test_c5_parabolic_barrier(desk_sweep):
    _, report, _, _ = desk_sweep
    ratios = [r["parabolic_barrier_V2_per_s"] / r["barrier_V2_per_s"] for r in report.rows]
    ok = all(q > 1 for q in ratios)
    assert record(5, "parabolic barrier", ok, "ratio = " + ", ".join(f"{q:.2f}" for q in ratios))


def test_c6_extraction_invariants(desk_sweep):
    from sramflip.extraction import Trajectory, extract_drift
    from sramflip.projection import embed, make_axis
    from sramflip import Equilibria, StatePoint

    _, report, out, _ = desk_sweep
    ok, worst = True, 0.0
    for row in report.rows:
        drift, pot = read_tables_csv(out / row["drift_table"])
        pos = drift.vv >= 0
        h = drift.h[pos]
        ok &= h[0] == 0.0 and h[-1] == 0.0
        ok &= bool(np.all(np.diff(pot.u[pot.vv >= 0]) >= 0))
        g = -np.gradient(pot.u, pot.vv)[1:-1]
        ref = drift.h[1:-1]
        rms = math.sqrt(np.mean((g - ref) ** 2) / np.mean(ref ** 2))
        worst = max(worst, rms)
    ok &= worst < 0.01

    s0, sm = (0.01, 0.19), (0.05, 0.15)
    d = math.hypot(sm[0] - s0[0], sm[1] - s0[1])
    eq = Equilibria(StatePoint(*s0), StatePoint(*sm), StatePoint(0.19, 0.01),
                    ((sm[0] - s0[0]) / d, (sm[1] - s0[1]) / d), d)
    axis = make_axis(eq, 0.2)
    tau0 = 10e-9
    t = np.arange(0.0, 20 * tau0, tau0 / 200)
    st = np.column_stack(embed(0.999 * d * np.exp(-t / tau0), axis))
    tau = extract_drift(Trajectory(t, st, {"epsilon": 1e-3 * d, "dt": tau0 / 200}), axis).tau
    ok &= abs(tau / tau0 - 1) < 0.01
    detail = f"worst -dU/dv rms err {worst:.2e}; synthetic tau err {tau / tau0 - 1:+.2e}"
    assert record(6, "extraction invariants", ok, detail)


def test_c7_determinism_across_threads(tmp_path):
    text = ("sweep.dv_start = 40 mV\nsweep.dv_stop = 44 mV\nsweep.dv_step = 2 mV\n"
            "mc.n_paths = 400\nmc.n_paths_2d = 20\n")
    cfg = load_config(text)
    run_sweep(cfg, str(tmp_path / "a"), workers=1)
    run_sweep(cfg, str(tmp_path / "b"), workers=3)
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix in (".csv", ".txt"))
    same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files]
    ok = all(same) and len(files) >= 3 * 3 + 2
    assert record(7, "determinism", ok, f"{sum(same)}/{len(files)} files byte-identical, workers 1 vs 3")


def test_c9_desk_budget(desk_sweep):
    cfg, report, _, secs = desk_sweep
    n1 = [r["n_mc1d"] for r in report.rows]
    n2 = [r["n_mc2d"] for r in report.rows]
    ok = secs < 600 and len(report.rows) == 5 and report.ok
    ok &= all(r["status"] == "ok" for r in report.rows)
    ok &= min(n1) == cfg.mc.n_paths and min(n2) == cfg.mc.n_paths_2d
    for r in report.rows:
        for tag in ("mc1d", "mc2d"):
            if r[f"n_censored_{tag}"] == 0:
                ok &= math.isfinite(r[f"ci_lo_{tag}_s"]) and math.isfinite(r[f"ci_hi_{tag}_s"])
    detail = (f"{len(report.rows)} points, n1d={cfg.mc.n_paths}, n2d={cfg.mc.n_paths_2d}, "
              f"noise_scale={cfg.cell.noise_scale:g}, {secs:.0f}s")
    assert record(9, "desk-scale budget", ok, detail)
