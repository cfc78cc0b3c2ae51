"""Command-line front end.

Exit codes: 0 all PASS, 1 some FAIL, 2 configuration error, 3 numerical error.
Errors go to stderr as one line ``error:<tag>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import analysis
from .config import OUTPUT_ENV, PRESETS, ScenarioConfig, load_file, load_preset
from .errors import ConfigError, MfError, NumericalError, UnsupportedProfileError
from .fields import r_farima_quadrature
from .kernels import r_fwn_unhalved
from .simulate import GAUSSIAN_METHOD, RNG_NAME, PartialSumSpec, factorize, partial_sum_cov_exact, sample_paths
from .specialfn import c_norm, d_coef

SUBCOMMANDS = ("kernels", "verify-invariance", "sample", "tangent-check", "holder",
               "representation-check", "renorm-check", "oracle-compare")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rel_tol(cfg):
    return cfg["quadrature"]["rel_tol"]


def _max_panels(cfg):
    return cfg["quadrature"]["max_panels"]


def _base_report(cfg, params=None) -> analysis.Report:
    return analysis.Report(analysis.scenario_of(cfg.profile, cfg.asympt, cfg["model"]["kind"]) | {"name": cfg.name},
                           params or {})


# -- subcommands -------------------------------------------------------------


def run_kernels(cfg, threads):
    asy = cfg.asympt
    rep = _base_report(cfg, {"hurst_pairs": cfg["kernels"]["hurst_pairs"]})
    tol = cfg.tol("constants")
    rows = []
    for h1, h2 in cfg["kernels"]["hurst_pairs"]:
        r = float(asy(h1, h2))
        row = {"h1": h1, "h2": h2, "R": r, "D": float(d_coef(h1, h2)),
               "C_h1": float(c_norm(h1)), "C_h2": float(c_norm(h2))}
        if asy.kind == "farima":
            q = r_farima_quadrature(h1, h2)
            row["R_quadrature"] = q
            rep.add(f"R({h1:g},{h2:g})_vs_beta_integral", abs(r - q), tol)
        if asy.kind == "fwn":
            row["R_without_half"] = float(r_fwn_unhalved(h1, h2))
            if h1 == h2:
                rep.add(f"R({h1:g},{h1:g})_vs_H(2H-1)", abs(r - h1 * (2 * h1 - 1)), tol)
        rows.append(row)
        print(f"R({h1:g}, {h2:g}) = {r:.12g}   [{asy.kind}]")
    grid = np.linspace(0.5 + 1e-3, 1 - 1e-3, 50)
    rep.add("D(H,H)=1/2", float(np.max(np.abs(np.asarray(d_coef(grid, grid)) - 0.5))), 1e-12)
    rep.audit["values"] = rows
    return rep, {}


def run_invariance(cfg, threads):
    rep = analysis.invariance_report(cfg.model, cfg.profile, cfg["N_ladder"], cfg["time_grid"],
                                     tol=cfg.tol("invariance"), rel_tol=_rel_tol(cfg), threads=threads,
                                     max_panels=_max_panels(cfg))
    rep.scenario["name"] = cfg.name
    rep.audit["calibration"] = "decay tolerances are empirical calibrations"
    return rep, {}


def run_sample(cfg, threads):
    s = cfg["sample"]
    spec = PartialSumSpec(cfg.model, cfg.profile, s["N"], tuple(s["times"]))
    m = factorize(partial_sum_cov_exact(spec, threads=threads))
    reps = cfg["replicates"]
    x = sample_paths(m, reps, cfg["seed"], threads=threads)
    rep = _base_report(cfg, {"N": s["N"], "times": s["times"], "replicates": reps, "seed": cfg["seed"]})
    scale = float(np.max(np.abs(m.matrix)))
    rep.add("factor_reconstruction", m.reconstruction_error() / max(scale, 1e-300), cfg.tol("factor"))
    rep.add("psd_min_eigenvalue", -m.min_eigenvalue() / max(np.trace(m.matrix), 1e-300), 1e-8,
            note="negative part of the smallest eigenvalue relative to the trace")
    if reps >= 2:
        emp = x.T @ x / reps
        d = np.sqrt(np.diag(m.matrix))
        se = np.sqrt((m.matrix ** 2 + np.outer(d, d) ** 2) / reps)
        z = np.abs(emp - m.matrix) / np.maximum(se, 1e-300)
        rep.add("sample_cov_within_5se", float(np.max(z)), 5.0)
    rep.audit.update(rng=RNG_NAME, gaussian=GAUSSIAN_METHOD, jitter=m.jitter, factor_state=m.state)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([f"t={t:g}" for t in s["times"]])
    for row in x:
        w.writerow([analysis._g17(v) for v in row])
    return rep, {"samples.csv": buf.getvalue()}


def run_tangent(cfg, threads):
    t = cfg["tangent"]
    rep = analysis.tangent_report(cfg.profile, cfg.asympt, t["base_points"], t["lags"], cfg["eps_ladder"],
                                  t["distinct_pairs"], distinct_tol=cfg.tol("tangent_distinct"),
                                  exact_tol=cfg.tol("tangent_exact"), rel_tol=min(_rel_tol(cfg), 1e-10),
                                  model=cfg["model"]["kind"], max_panels=_max_panels(cfg))
    rep.scenario["name"] = cfg.name
    return rep, {}


def run_holder(cfg, threads):
    h = cfg["holder"]
    prof = cfg.profile
    rep = _base_report(cfg, {"t0": h["t0"], "window": h["window"], "cells": h["cells"],
                             "replicates": cfg["replicates"], "seed": cfg["seed"]})
    tol = cfg.tol("holder")
    rows = []
    for t0 in h["t0"]:
        est, info = analysis.holder_estimate(prof, t0, h["window"], cfg["replicates"], cfg["seed"], cfg.asympt,
                                             h["cells"], rel_tol=_rel_tol(cfg), threads=threads,
                                             max_panels=_max_panels(cfg))
        target = float(prof(t0))
        rep.add(f"holder_t0={t0:g}", abs(est - target), tol, note=f"estimate {est:.6f}, h(t0) {target:.6f}")
        rows.append({"t0": t0, "estimate": est, "h": target, "moments": info["moments"], "lags": info["lags"]})
    rep.audit.update(rng=RNG_NAME, gaussian=GAUSSIAN_METHOD, estimates=rows)
    return rep, {}


def run_representation(cfg, threads):
    r = cfg["representation"]
    rep = analysis.representation_report(cfg.profile, cfg.asympt, r["t"], r["s"], r["dH"], r["grid_step"],
                                         cfg.tol("representation"), r["refinements"],
                                         rel_tol=min(_rel_tol(cfg), 1e-10), model=cfg["model"]["kind"],
                                         max_panels=_max_panels(cfg))
    rep.scenario["name"] = cfg.name
    return rep, {}


def run_renorm(cfg, threads):
    rn = cfg["renorm"]
    rep = analysis.renorm_report(cfg.model, rn["hurst_pairs"], rn["fixed_N"], rn["conv_N"],
                                 cfg.tol("renorm_fixed"))
    rep.scenario["name"] = cfg.name
    return rep, {}


def run_oracle(cfg, threads):
    o = cfg["oracle"]
    rep = analysis.oracle_report(cfg.profile, cfg.asympt, o["times"], o["N"], o["M"], cfg.tol("oracle"),
                                 rel_tol=_rel_tol(cfg), model=cfg["model"]["kind"], max_panels=_max_panels(cfg))
    rep.scenario["name"] = cfg.name
    return rep, {}


RUNNERS = {
    "kernels": run_kernels, "verify-invariance": run_invariance, "sample": run_sample,
    "tangent-check": run_tangent, "holder": run_holder, "representation-check": run_representation,
    "renorm-check": run_renorm, "oracle-compare": run_oracle,
}

PLANS = {
    "kernels": "evaluate R, D and C on the configured Hurst pairs and check the closed forms",
    "verify-invariance": "exact partial-sum covariances for each N in N_ladder against the limit covariance",
    "sample": "exact covariance at sample.N, Cholesky factor, Gaussian samples",
    "tangent-check": "normalized increment covariances along eps_ladder against the tangent field",
    "holder": "simulate local paths and regress log second moments on log lag at each t0",
    "representation-check": "covariance of the integral representation against the limit covariance",
    "renorm-check": "renormalized covariances against the increment field Z",
    "oracle-compare": "Riemann-sum oracle against the limit-covariance quadrature",
}


def write_outputs(outdir: str, rep: analysis.Report, extra: dict) -> list:
    written = []
    path = os.path.join(outdir, "report.json")
    atomic_write(path, rep.to_json())
    written.append(path)
    for name in sorted(rep.tables):
        p = os.path.join(outdir, f"{name}.csv")
        atomic_write(p, rep.table_csv(name))
        written.append(p)
    for name, text in sorted(extra.items()):
        p = os.path.join(outdir, name)
        atomic_write(p, text)
        written.append(p)
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfinvariance", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario JSON file")
    src.add_argument("--preset", choices=PRESETS, help="built-in scenario")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                   help="override a config entry by dot path (value parsed as JSON)")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("--output-dir", default=None, help="output directory (overrides config and environment)")
    p.add_argument("--dry-run", action="store_true", help="validate and print the work plan only")
    return p


def _fail(tag: str, msg: str, code: int) -> int:
    print(f"error:{tag}: {' '.join(str(msg).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        user = load_preset(args.preset) if args.preset else load_file(args.config)
        overrides = list(args.overrides)
        if args.threads is not None:
            overrides.append(f"threads={args.threads}")
        out_override = args.output_dir or os.environ.get(OUTPUT_ENV) or None
        cfg = ScenarioConfig.build(user, overrides, out_override)
    except ConfigError as exc:
        return _fail(exc.tag, exc, EXIT_CONFIG)
    outdir = os.path.join(cfg["output_dir"], cfg.name, args.subcommand)
    if args.dry_run:
        plan = {"subcommand": args.subcommand, "plan": PLANS[args.subcommand], "output_dir": outdir,
                "config": cfg.raw}
        print(json.dumps(plan, sort_keys=True, indent=2))
        return EXIT_OK
    threads = int(cfg["threads"])
    try:
        rep, extra = RUNNERS[args.subcommand](cfg, threads)
    except UnsupportedProfileError as exc:
        return _fail(exc.tag, exc, EXIT_CONFIG)
    except ConfigError as exc:
        return _fail(exc.tag, exc, EXIT_CONFIG)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        tag = exc.tag if isinstance(exc, MfError) else "numerical"
        return _fail(tag, exc, EXIT_NUMERICAL)
    except MfError as exc:
        return _fail(exc.tag, exc, EXIT_CONFIG)
    except ValueError as exc:
        # argument checks inside the numerics reject this scenario
        return _fail("config", exc, EXIT_CONFIG)
    # execution knobs stay out of the artifacts so reruns are byte-identical
    rep.audit["config"] = {k: v for k, v in cfg.raw.items() if k not in ("threads", "output_dir")}
    for c in rep.criteria:
        print(f"{c.verdict} {c.name} value={c.value:.6g} tol={c.tolerance:.3g}")
    write_outputs(outdir, rep, extra)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
