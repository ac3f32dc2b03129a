"""Offset sweeps comparing Monte Carlo MTTF with the closed-form estimators."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .circuit import find_equilibria, node_noise_sigma
from .config import RunConfig
from .errors import MonostableError, SramFlipError
from .estimators import kish_mttf, nobile_mttf, siegert_mttf
from .extraction import extract_cell, sigma_vv_of, write_tables_csv
from .sde import SdeModel1D, Simulator1D, Simulator2D, mttf_stats, run_ensemble, write_ensemble_csv

REPORT_COLUMNS = [
    "dv_V", "status", "delta_vv_V", "tau_s", "sigma_vv_V", "sigma_w_V_per_sqrt_s", "barrier_V2_per_s",
    "parabolic_barrier_V2_per_s", "barrier_ratio", "negative_extension",
    "mttf_kish_s", "mttf_nobile_s", "mttf_siegert_s",
    "mttf_mc1d_s", "ci_lo_mc1d_s", "ci_hi_mc1d_s", "n_mc1d", "n_censored_mc1d",
    "mttf_mc2d_s", "ci_lo_mc2d_s", "ci_hi_mc2d_s", "n_mc2d", "n_censored_mc2d",
    "drift_table",
]
PLOT_COLUMNS = ["dv_mV", "mttf_mc2d_s", "mttf_mc1d_s", "mttf_kish_s", "mttf_nobile_s", "mttf_siegert_s",
                "ci_lo_s", "ci_hi_s"]
_INT_COLUMNS = {"n_mc1d", "n_censored_mc1d", "n_mc2d", "n_censored_mc2d"}
_STR_COLUMNS = {"status", "negative_extension", "drift_table"}


@dataclass
class SweepReport:
    rows: list
    config_echo: str = ""
    timings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(str(r.get("status", "")).startswith("error") for r in self.rows)


def _point_tag(dv: float) -> str:
    return f"dv_{dv * 1e3:+.4f}mV".replace("+", "p").replace("-", "m").replace(".", "_")


def run_point(cfg: RunConfig, dv: float, outdir: str | None = None) -> tuple[dict, dict]:
    """Full pipeline at one offset; returns ``(row, timings)``.

    Errors are quarantined into ``row["status"]``.
    """
    row = {c: None for c in REPORT_COLUMNS}
    row["dv_V"] = dv
    timings = {"dv_V": dv}
    p = cfg.cell.with_offset(dv)
    try:
        t0 = time.perf_counter()
        eq = find_equilibria(p)
    except MonostableError as exc:
        row["status"] = "monostable"
        timings["error"] = str(exc)
        return row, timings
    try:
        eq, axis, drift, pot = extract_cell(p, eq)
        timings["extract_s"] = time.perf_counter() - t0
        sigma_w = node_noise_sigma(p)
        sigma_vv = sigma_vv_of(p, drift.tau)
        row.update({
            "delta_vv_V": eq.delta_vv, "tau_s": drift.tau, "sigma_vv_V": sigma_vv,
            "sigma_w_V_per_sqrt_s": sigma_w, "barrier_V2_per_s": pot.barrier,
            "parabolic_barrier_V2_per_s": pot.parabolic_barrier,
            "barrier_ratio": pot.parabolic_barrier / pot.barrier,
            "negative_extension": drift.meta.get("negative_extension", "none"),
        })
        if outdir is not None:
            name = f"drift_{_point_tag(dv)}.csv"
            write_tables_csv(os.path.join(outdir, name), drift, pot)
            row["drift_table"] = name
        methods = cfg.estimators
        t0 = time.perf_counter()
        if "kish" in methods:
            row["mttf_kish_s"] = kish_mttf(eq.delta_vv, sigma_vv, drift.tau).mttf
        if "nobile" in methods:
            row["mttf_nobile_s"] = nobile_mttf(eq.delta_vv, sigma_vv, drift.tau).mttf
        if "siegert" in methods:
            row["mttf_siegert_s"] = siegert_mttf(pot, sigma_w, eq.delta_vv).mttf
        timings["estimators_s"] = time.perf_counter() - t0
        if "mc-1d" in methods:
            t0 = time.perf_counter()
            sim = Simulator1D(SdeModel1D(drift, sigma_w, eq.delta_vv), dt=drift.tau / cfg.mc.dt_1d_per_tau,
                              t_max=cfg.mc.horizon_1d_tau * drift.tau)
            ens = run_ensemble(sim, cfg.mc.n_paths, cfg.mc.base_seed)
            est = mttf_stats(ens)
            row.update({"mttf_mc1d_s": est.mean, "ci_lo_mc1d_s": est.ci95[0], "ci_hi_mc1d_s": est.ci95[1],
                        "n_mc1d": ens.n, "n_censored_mc1d": ens.n_censored})
            if outdir is not None:
                write_ensemble_csv(os.path.join(outdir, f"ttf_mc1d_{_point_tag(dv)}.csv"), ens, p.digest())
            timings["mc1d_s"] = time.perf_counter() - t0
        if "mc-2d" in methods:
            t0 = time.perf_counter()
            sim = Simulator2D(p, eq, fmax=cfg.mc.fmax, t_max=cfg.mc.t_max)
            ens = run_ensemble(sim, cfg.mc.n_paths_2d, cfg.mc.base_seed)
            est = mttf_stats(ens)
            row.update({"mttf_mc2d_s": est.mean, "ci_lo_mc2d_s": est.ci95[0], "ci_hi_mc2d_s": est.ci95[1],
                        "n_mc2d": ens.n, "n_censored_mc2d": ens.n_censored})
            if outdir is not None:
                write_ensemble_csv(os.path.join(outdir, f"ttf_mc2d_{_point_tag(dv)}.csv"), ens, p.digest())
            timings["mc2d_s"] = time.perf_counter() - t0
        row["status"] = "ok"
    except SramFlipError as exc:
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row, timings


def run_sweep(cfg: RunConfig, outdir: str | None = None, workers: int | None = None) -> SweepReport:
    """Run every sweep point (in parallel when ``workers > 1``) and collect the report.

    With ``outdir`` set, drift tables and TTF dumps are written per point and
    the report files (``report.csv``, ``mttf_vs_dv.csv``, ``config_echo.txt``,
    ``run_meta.json``) are written at the end.
    """
    workers = cfg.workers if workers is None else workers
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
    points = cfg.sweep.points()
    t0 = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda dv: run_point(cfg, dv, outdir), points))
    else:
        results = [run_point(cfg, dv, outdir) for dv in points]
    report = SweepReport([r for r, _ in results], cfg.echo(), [t for _, t in results])
    if outdir is not None:
        write_report_csv(os.path.join(outdir, "report.csv"), report)
        with open(os.path.join(outdir, "mttf_vs_dv.csv"), "w", newline="") as fh:
            fh.write(plot_data_csv(report))
        with open(os.path.join(outdir, "config_echo.txt"), "w") as fh:
            fh.write(report.config_echo)
        with open(os.path.join(outdir, "run_meta.json"), "w") as fh:
            json.dump({"wall_time_s": time.perf_counter() - t0, "points": report.timings,
                       "workers": workers}, fh, indent=2, sort_keys=True)
    return report


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def report_csv_text(report: SweepReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report.rows:
        writer.writerow([_fmt(row.get(c)) for c in REPORT_COLUMNS])
    return buf.getvalue()


def write_report_csv(path, report: SweepReport) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(report_csv_text(report))


def read_report_csv(path) -> SweepReport:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for c in REPORT_COLUMNS:
                raw = rec.get(c, "")
                if raw == "" or raw is None:
                    row[c] = None
                elif c in _STR_COLUMNS:
                    row[c] = raw
                elif c in _INT_COLUMNS:
                    row[c] = int(raw)
                else:
                    row[c] = float(raw)
            rows.append(row)
    return SweepReport(rows)


def plot_data_csv(report: SweepReport) -> str:
    """``mttf_vs_dv.csv`` text; missing values stay empty. The CI is MC-2D's, else MC-1D's."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLOT_COLUMNS)
    for row in report.rows:
        if row.get("mttf_mc2d_s") is not None:
            ci = (row.get("ci_lo_mc2d_s"), row.get("ci_hi_mc2d_s"))
        else:
            ci = (row.get("ci_lo_mc1d_s"), row.get("ci_hi_mc1d_s"))
        writer.writerow([_fmt(row["dv_V"] * 1e3), _fmt(row.get("mttf_mc2d_s")), _fmt(row.get("mttf_mc1d_s")),
                         _fmt(row.get("mttf_kish_s")), _fmt(row.get("mttf_nobile_s")),
                         _fmt(row.get("mttf_siegert_s")), _fmt(ci[0]), _fmt(ci[1])])
    return buf.getvalue()


def _cell(value, fmt="{:.3e}"):
    if value is None:
        return "-"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return fmt.format(value)


def format_table(report: SweepReport) -> str:
    """Aligned human-readable comparison table."""
    head = ["dV[mV]", "Dvv[mV]", "tau[ns]", "Dvv/svv", "Upar/U", "MC-2D[s]", "MC-1D[s]", "Siegert[s]",
            "Nobile[s]", "Kish[s]", "Kish/MC1D", "status"]
    lines = []
    for r in report.rows:
        ratio = None
        if r.get("mttf_kish_s") is not None and r.get("mttf_mc1d_s"):
            ratio = r["mttf_kish_s"] / r["mttf_mc1d_s"]
        snr = None
        if r.get("delta_vv_V") is not None and r.get("sigma_vv_V"):
            snr = r["delta_vv_V"] / r["sigma_vv_V"]
        lines.append([
            f"{r['dv_V'] * 1e3:.2f}",
            _cell(None if r.get("delta_vv_V") is None else r["delta_vv_V"] * 1e3, "{:.2f}"),
            _cell(None if r.get("tau_s") is None else r["tau_s"] * 1e9, "{:.4f}"),
            _cell(snr, "{:.2f}"), _cell(r.get("barrier_ratio"), "{:.2f}"),
            _cell(r.get("mttf_mc2d_s")), _cell(r.get("mttf_mc1d_s")), _cell(r.get("mttf_siegert_s")),
            _cell(r.get("mttf_nobile_s")), _cell(r.get("mttf_kish_s")), _cell(ratio, "{:.3g}"),
            str(r.get("status")),
        ])
    widths = [max(len(h), *(len(l[i]) for l in lines)) if lines else len(h) for i, h in enumerate(head)]
    out = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    out.append("  ".join("-" * w for w in widths))
    out.extend("  ".join(c.rjust(w) for c, w in zip(l, widths)) for l in lines)
    return "\n".join(out) + "\n"


def compare_report(report: SweepReport, outdir: str | None = None) -> tuple[str, str]:
    """Return ``(table_text, plot_csv_text)``; writes ``mttf_vs_dv.csv`` into ``outdir`` if given."""
    if not report.rows:
        raise ValueError("empty report")
    table = format_table(report)
    plot = plot_data_csv(report)
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "mttf_vs_dv.csv"), "w", newline="") as fh:
            fh.write(plot)
    return table, plot
