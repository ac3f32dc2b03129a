"""Command line entry point: ``sramflip {extract,simulate,estimate,sweep,report}``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .circuit import find_equilibria, node_noise_sigma
from .config import RunConfig, load_config, parse_quantity
from .errors import SramFlipError
from .estimators import kish_mttf, nobile_mttf, siegert_mttf
from .extraction import extract_cell, sigma_vv_of, write_tables_csv
from .harness import compare_report, read_report_csv, run_sweep
from .sde import SdeModel1D, Simulator1D, Simulator2D, mttf_stats, run_ensemble, write_ensemble_csv


def _config(args) -> RunConfig:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            return load_config(fh.read())
    return RunConfig()


def _dv(args, cfg: RunConfig) -> float:
    if args.dv is None:
        return cfg.sweep.dv_start
    return parse_quantity(args.dv, "V")


def _sidecar(path, meta):
    with open(path + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def cmd_extract(args) -> int:
    cfg = _config(args)
    p = cfg.cell.with_offset(_dv(args, cfg))
    eq, _, drift, pot = extract_cell(p, extend=args.extend)
    write_tables_csv(args.out, drift, pot)
    _sidecar(args.out, {"params": p.as_dict(), "params_hash": p.digest(), "tau_s": drift.tau,
                        "delta_vv_V": eq.delta_vv, "barrier_V2_per_s": pot.barrier,
                        "parabolic_barrier_V2_per_s": pot.parabolic_barrier,
                        "negative_extension": drift.meta.get("negative_extension")})
    print(f"delta_vv = {eq.delta_vv * 1e3:.4f} mV, tau = {drift.tau * 1e9:.4f} ns, "
          f"U(delta_vv) = {pot.barrier:.6g} V^2/s, parabolic/actual = {pot.parabolic_barrier / pot.barrier:.3f}")
    print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    p = cfg.cell.with_offset(_dv(args, cfg))
    n = args.n if args.n is not None else (cfg.mc.n_paths if args.mode == "1d" else cfg.mc.n_paths_2d)
    seed = cfg.mc.base_seed if args.seed is None else args.seed
    if args.mode == "1d":
        eq, _, drift, _ = extract_cell(p)
        sim = Simulator1D(SdeModel1D(drift, node_noise_sigma(p), eq.delta_vv),
                          dt=drift.tau / cfg.mc.dt_1d_per_tau, t_max=cfg.mc.horizon_1d_tau * drift.tau)
    else:
        sim = Simulator2D(p, find_equilibria(p), fmax=cfg.mc.fmax, t_max=cfg.mc.t_max)
    ens = run_ensemble(sim, n, seed)
    est = mttf_stats(ens)
    write_ensemble_csv(args.out, ens, p.digest())
    print(f"mode={ens.mode} n={ens.n} censored={ens.n_censored} MTTF={est.mean:.6g} s "
          f"CI95=[{est.ci95[0]:.6g}, {est.ci95[1]:.6g}] s")
    print(f"wrote {args.out}")
    return 0


def cmd_estimate(args) -> int:
    cfg = _config(args)
    p = cfg.cell.with_offset(_dv(args, cfg))
    eq, _, drift, pot = extract_cell(p)
    sigma_vv = sigma_vv_of(p, drift.tau)
    if args.method == "kish":
        res = kish_mttf(eq.delta_vv, sigma_vv, drift.tau)
    elif args.method == "nobile":
        res = nobile_mttf(eq.delta_vv, sigma_vv, drift.tau)
    else:
        res = siegert_mttf(pot, node_noise_sigma(p), eq.delta_vv)
    nums = (res.mttf, eq.delta_vv, sigma_vv, drift.tau, node_noise_sigma(p))
    line = ",".join([res.method, *(repr(float(x)) for x in nums), str(int(res.overflow))])
    header = "method,mttf_s,delta_vv_V,sigma_vv_V,tau_s,sigma_w_V_per_sqrt_s,overflow"
    print(header)
    print(line)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(header + "\n" + line + "\n")
        _sidecar(args.out, {"params": p.as_dict(), "params_hash": p.digest()})
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    outdir = args.out or cfg.output
    report = run_sweep(cfg, outdir, workers=args.workers)
    table, _ = compare_report(report)
    print(table, end="")
    print(f"wrote {os.path.join(outdir, 'report.csv')}")
    return 0 if report.ok else 1


def cmd_report(args) -> int:
    report = read_report_csv(args.input)
    outdir = args.out or os.path.dirname(os.path.abspath(args.input))
    table, _ = compare_report(report, outdir)
    print(table, end="")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sramflip", description="SRAM retention bit-flip MTTF toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="run configuration file (section.key = value)")
        sp.add_argument("--dv", help="offset dv1 = -dv2, e.g. '40mV' (default: sweep.dv_start)")

    sp = sub.add_parser("extract", help="drift and quasi-potential tables")
    common(sp)
    sp.add_argument("--extend", choices=["trajectory", "harmonic"], default="trajectory")
    sp.add_argument("--out", default="drift.csv")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("simulate", help="Monte Carlo TTF ensemble")
    common(sp)
    sp.add_argument("--mode", choices=["1d", "2d"], default="1d")
    sp.add_argument("--n", type=int, help="number of paths (default: mc.n_paths or mc.n_paths_2d)")
    sp.add_argument("--seed", type=int, help="base seed (default: mc.base_seed)")
    sp.add_argument("--out", default="ttf.csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="closed-form / quadrature MTTF")
    common(sp)
    sp.add_argument("--method", choices=["kish", "nobile", "siegert"], required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("sweep", help="offset sweep with all estimators")
    sp.add_argument("--config", required=True, help="run configuration file")
    sp.add_argument("--out", help="output directory (default: output.dir from the config)")
    sp.add_argument("--workers", type=int, help="threads over sweep points (default: run.workers)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="re-render a sweep report")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", help="directory for mttf_vs_dv.csv (default: next to the input)")
    sp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SramFlipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
