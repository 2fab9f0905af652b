"""Command-line front end.

Exit codes: 0 when every pass flag is true, 2 when a check fails, 1 on
configuration, IO or numerical errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import config_hash, load_config
from .counterexamples import SqrtFamilyMember, strict_comparison_demo, verify_sqrt_family
from .errors import ConfigError, DomainError, EvaluationError, NumericalBlowupError, ParameterError
from .generators import combined_constant, verify_lemma1
from .solver import simulate_paths, solve_fd, write_field_csv
from .squeeze import (SqueezeConfig, a_priori_bound, check_monotone, run_squeeze,
                      uniform_bound_check, uniqueness_certificate)

SQUEEZE_COLUMNS = ["n", "y_lower0", "y_upper0", "gap", "bound", "eps_num", "pass"]
FIELD_COLUMNS = ["t", "x", "y", "z"]
REPORT_KEYS = ("experiment", "pass")
MANIFEST_KEYS = ("config_sha256", "seed", "version", "experiment", "files")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def dump_csv(rows, columns, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r[c]) for c in columns) + "\n")


# -- experiments ---------------------------------------------------------------

def _envelope_verify(cfg, args):
    raw = cfg.raw
    g = cfg.generator()
    zg = raw["z_grid"]
    count = int(math.floor((zg["hi"] - zg["lo"]) / zg["step"] + 1e-9)) + 1
    z = zg["lo"] + zg["step"] * np.arange(count)
    if g.dim == 2:
        a, b = np.meshgrid(z, z, indexing="ij")
        z = np.stack([a.ravel(), b.ravel()], axis=-1)
    rep = verify_lemma1(g, raw["n_ladder"], z, lattice_step_h=raw.get("lattice_step_h"),
                        iv_ladder=raw.get("iv_ladder"))
    rows = [{"n": n, "max_gap": rep.max_gap[n], "gap_bound": rep.gap_bound[n],
             "pass": rep.max_gap[n] <= rep.gap_bound[n]} for n in rep.n_list]
    report = {
        "experiment": cfg.experiment,
        "generator": rep.generator,
        "C": combined_constant(g),
        "lattice_step_h": rep.lattice_step_h,
        "checks": {k: {"pass": c.passed, "worst": c.worst, "witness": c.witness}
                   for k, c in rep.checks.items()},
        "rows": rows,
        "convergence_table": rep.convergence_table,
        "pass": rep.passed and all(r["pass"] for r in rows),
    }
    return report, rows, ["n", "max_gap", "gap_bound", "pass"], None


def _solve(cfg, args):
    raw = cfg.raw
    g = cfg.generator()
    phi = cfg.terminal()
    grid = cfg.grid(even_steps=args.half_resolution)
    field = solve_fd(g, phi, grid)
    report = {"experiment": cfg.experiment, "generator": g.to_dict(), "terminal": phi.to_dict(),
              "grid": grid.to_dict(), "y0": field.y0, "z0": field.z0}
    ok = True
    if args.half_resolution:
        coarse = solve_fd(g, phi, grid.half_resolution())
        report["y0_half_resolution"] = coarse.y0
        report["refinement_delta"] = abs(field.y0 - coarse.y0)
    if "reference" in raw:
        err = abs(field.y0 - raw["reference"]["y0"])
        report["reference"] = dict(raw["reference"], error=err)
        ok = err <= raw["reference"]["tol"]
    report["pass"] = bool(ok)
    rows = [{"y0": field.y0, "z0": field.z0, "pass": report["pass"]}]
    stride = raw.get("output", {}).get("field_time_stride", 1)
    return report, rows, ["y0", "z0", "pass"], (field, stride)


def _squeeze(cfg, args):
    raw = cfg.raw
    g = cfg.generator()
    phi = cfg.terminal()
    grid = cfg.grid(even_steps=True)
    paths = raw.get("paths", {})
    scfg = SqueezeConfig(g, phi, grid, tuple(raw["n_ladder"]),
                         num_paths=paths.get("num_paths", 0), seed=cfg.seed,
                         pathwise_time=raw.get("pathwise_time"))
    rep = run_squeeze(scfg, workers=args.threads)
    mono = check_monotone(rep) if len(rep.rows) >= 2 else None
    cert = uniqueness_certificate(rep) if len(rep.rows) >= 3 else None
    M0 = raw.get("M0_estimate")
    if M0 is None:
        M0 = a_priori_bound(float(np.max(np.abs(phi(grid.x)))), combined_constant(g), grid.T)
    bound_ok, sup = uniform_bound_check(rep, M0)
    rows = rep.table()
    report = {
        "experiment": cfg.experiment,
        "generator": rep.generator, "terminal": rep.terminal, "grid": rep.grid,
        "rows": rows,
        "details": [
            {"n": r.n, "refinement_error": r.refinement_error, "lattice_slack": r.lattice_slack,
             "lattice_step_h": r.lattice_step_h, "sup_abs_y": r.sup_abs_y,
             "pathwise_gap": r.pathwise_gap, "pathwise_stderr": r.pathwise_stderr}
            for r in rep.rows],
        "monotone": None if mono is None else {"pass": mono.passed, "witnesses": mono.witnesses},
        "certificate": None if cert is None else {
            "gap_sequence": cert.gap_sequence, "extrapolated_limit": cert.extrapolated_limit,
            "pass": cert.passed},
        "uniform_bound": {"M0_estimate": M0, "sup_abs_y": sup, "pass": bound_ok},
    }
    flags = [rep.passed, bound_ok]
    flags += [mono.passed] if mono else []
    flags += [cert.passed] if cert else []
    report["pass"] = bool(all(flags))
    return report, rows, SQUEEZE_COLUMNS, None


def _counterexample_sqrt(cfg, args):
    raw = cfg.raw
    nt = raw["num_time_steps"]
    rows = []
    for c in raw["c_values"]:
        res = verify_sqrt_family(c, nt)
        rows.append({"c": float(c), "y0": float(SqrtFamilyMember(c).y(0.0)), "residual": res,
                     "tolerance": 2.0 / nt, "pass": res <= 2.0 / nt})
    y0s = sorted({r["y0"] for r in rows})
    report = {"experiment": cfg.experiment, "num_time_steps": nt, "rows": rows,
              "distinct_initial_values": y0s,
              "non_uniqueness_witness": len(y0s) >= 2,
              "pass": all(r["pass"] for r in rows)}
    return report, rows, ["c", "y0", "residual", "tolerance", "pass"], None


def _counterexample_strict(cfg, args):
    raw = cfg.raw
    grid = cfg.grid()
    p = raw["paths"]
    paths = simulate_paths(cfg.seed, p["num_paths"], p.get("num_time_steps", 16), grid.T)
    demo = strict_comparison_demo(raw["c"], grid, paths)
    report = dict(demo.to_dict(), experiment=cfg.experiment, grid=grid.to_dict())
    rows = [{"c": demo.c, "y0_numeric": demo.y0_numeric, "y0_wide_domain": demo.y0_wide_domain,
             "prob_strictly_below": demo.prob_strictly_below, "pass": demo.passed}]
    return report, rows, ["c", "y0_numeric", "y0_wide_domain", "prob_strictly_below", "pass"], None


DISPATCH = {
    "envelope-verify": _envelope_verify,
    "solve": _solve,
    "squeeze": _squeeze,
    "counterexample-sqrt": _counterexample_sqrt,
    "counterexample-strict": _counterexample_strict,
}


def run(config_path, overrides=(), out_dir="out", seed=None, threads=None,
        half_resolution=False):
    """Run one experiment and write its artifacts; returns the exit code."""
    args = argparse.Namespace(threads=threads, half_resolution=half_resolution)
    try:
        cfg = load_config(config_path, overrides, seed)
        report, rows, columns, field = DISPATCH[cfg.experiment](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalBlowupError, EvaluationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 1
    try:
        os.makedirs(out_dir, exist_ok=True)
        files = ["report.json", "report.csv"]
        dump_json(report, os.path.join(out_dir, "report.json"))
        dump_csv(rows, columns, os.path.join(out_dir, "report.csv"))
        if field is not None:
            write_field_csv(field[0], os.path.join(out_dir, "field.csv"), field[1])
            files.append("field.csv")
        manifest = {"config_sha256": config_hash(cfg.raw), "seed": cfg.seed,
                    "version": __version__, "experiment": cfg.experiment,
                    "files": files, "config": cfg.raw}
        dump_json(manifest, os.path.join(out_dir, "manifest.json"))
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    status = "PASS" if report["pass"] else "FAIL"
    print(f"{cfg.experiment}: {status} -> {out_dir}")
    return 0 if report["pass"] else 2


# -- report validation ---------------------------------------------------------

def _validate_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError("empty CSV")
        width = len(header)
        count = 0
        for i, row in enumerate(reader, start=2):
            if len(row) != width:
                raise ValueError(f"line {i}: expected {width} fields")
            for v in row:
                if v not in ("true", "false"):
                    float(v)
            count += 1
    if os.path.basename(path) == "field.csv" and header != FIELD_COLUMNS:
        raise ValueError(f"field header must be {','.join(FIELD_COLUMNS)}")
    if header[:1] == ["n"] and "gap" in header and header != SQUEEZE_COLUMNS:
        raise ValueError(f"squeeze header must be {','.join(SQUEEZE_COLUMNS)}")
    return count


def _validate_json(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if os.path.basename(path) == "manifest.json":
        missing = [k for k in MANIFEST_KEYS if k not in obj]
    else:
        missing = [k for k in REPORT_KEYS if k not in obj]
        if obj.get("experiment") == "squeeze":
            for i, row in enumerate(obj.get("rows", [])):
                missing += [f"rows/{i}/{k}" for k in SQUEEZE_COLUMNS if k not in row]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")


def validate_report(path):
    """Re-parse an emitted artifact (or every artifact in a directory)."""
    targets = ([os.path.join(path, f) for f in sorted(os.listdir(path))
                if f.endswith((".json", ".csv"))] if os.path.isdir(path) else [path])
    if not targets:
        print(f"{path}: nothing to validate", file=sys.stderr)
        return 1
    code = 0
    for t in targets:
        try:
            if t.endswith(".csv"):
                _validate_csv(t)
            else:
                _validate_json(t)
            print(f"{t}: ok")
        except (OSError, ValueError, StopIteration) as exc:
            print(f"{t}: invalid ({exc})", file=sys.stderr)
            code = 1
    return code


def build_parser():
    p = argparse.ArgumentParser(
        prog="bsde-envelope",
        description="Lipschitz-envelope sandwich experiments for BSDEs with "
                    "uniformly continuous generators.",
        epilog="Defaults: envelope lattice step = effective search radius / 50; "
               "time steps = fewest allowed by dt <= min(0.4 dx^2, dx/(2 n_max)) "
               "when grid.num_time_steps is omitted; exact-equality tolerance 1e-12.",
    )
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="dotted-path override, e.g. grid.T=0.5")
    p.add_argument("--half-resolution", action="store_true",
                   help="also solve on the half-resolution grid (solve experiment; "
                        "the squeeze always does)")
    p.add_argument("--threads", type=int, default=None,
                   help="cap on worker threads; 1 reproduces parallel results exactly")
    p.add_argument("--validate-report", metavar="PATH",
                   help="re-parse an emitted report/CSV/manifest or an output directory")
    p.add_argument("--version", action="version", version=__version__)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.validate_report:
        return validate_report(args.validate_report)
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 1
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    return run(args.config, args.overrides, args.out, args.seed, args.threads,
               args.half_resolution)


if __name__ == "__main__":
    sys.exit(main())
