"""Command-line front end: ``thetadim <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 resolution error, 4 failed
study checks.  A JSON file given with ``--config`` supplies defaults; flags
given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiments as ex
from .covering import dim_estimate, optimal_cover_cost, CoveringQuery, theta_sweep
from .dyadic_core import load_leaves, save_leaves
from .errors import ConfigError, DomainError, OverLimitError, ResolutionError, ThetaDimError
from .kernels import KernelSpec, capacity_lower_bound, energy
from .measures import build_joint_frostman, save_measure, save_trace, uniform_measure, verify_frostman_profile
from .slicing import axis_plane, generic_offsets, sample_plane, slice_scan

EXIT_OK, EXIT_CONFIG, EXIT_RESOLUTION, EXIT_FAILED = 0, 2, 3, 4

SET_KINDS = ("rotated", "sequence", "sequence-strip", "pattern", "cube", "point")


def _floats(text):
    return [float(eval_number(v)) for v in str(text).split(",") if v.strip()]


def eval_number(text):
    """Parse ``0.5``, ``2^-8`` or ``2**-8``."""
    text = str(text).strip().replace("**", "^")
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _add_set_flags(p):
    g = p.add_argument_group("set selection")
    g.add_argument("--set", help="leaf file written by 'generate'")
    g.add_argument("--kind", choices=SET_KINDS, help="generator to use instead of --set")
    g.add_argument("--p", type=float, help="sequence exponent for rotated/sequence sets")
    g.add_argument("--pattern", type=_ints, help="kept child digits, e.g. 0,3")
    g.add_argument("--d", type=int, help="ambient dimension for pattern/cube/point")
    g.add_argument("--depth", type=int, help="tree depth (truncates a loaded set)")


def _add_common(p):
    p.add_argument("--config", help="JSON file with default flag values")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--jobs", type=int, help="parallel workers (default: available cores)")
    p.add_argument("--out", help="output file or directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="thetadim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a generator set to a leaf file")
    _add_set_flags(p)
    _add_common(p)

    p = sub.add_parser("estimate", help="theta-intermediate dimension estimate")
    _add_set_flags(p)
    _add_common(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--schedule", type=_floats, help="comma-separated coarse scales")
    p.add_argument("--mode", choices=("regression", "liminf", "limsup"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--scales-out", help="per-scale covering CSV")

    p = sub.add_parser("sweep", help="estimates over a theta grid")
    _add_set_flags(p)
    _add_common(p)
    p.add_argument("--thetas", type=_floats)
    p.add_argument("--schedule", type=_floats)
    p.add_argument("--mode", choices=("regression", "liminf", "limsup"))
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("frostman", help="build and audit a two-regime Frostman measure")
    _add_set_flags(p)
    _add_common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--delta", type=eval_number)

    p = sub.add_parser("energy", help="kernel energy and capacity lower bound")
    _add_set_flags(p)
    _add_common(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--delta", type=eval_number, help="kernel scale r")
    p.add_argument("--t", type=float, help="kernel exponent s")
    p.add_argument("--weight-m", type=int, help="|x|^-m weight (default 0)")
    p.add_argument("--alpha", type=float, help="use a Frostman measure with this alpha instead of uniform")

    p = sub.add_parser("slice-scan", help="slice dimensions against ambient minus one")
    _add_set_flags(p)
    _add_common(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--schedule", type=_floats)
    p.add_argument("--mode", choices=("regression", "liminf", "limsup"))
    p.add_argument("--offsets", type=int, help="offsets per direction (default 64)")
    p.add_argument("--planes", type=int, help="number of directions; 0 = horizontal only (default)")
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("study", help="named experiments")
    p.add_argument("name", choices=tuple(ex.STUDIES))
    _add_set_flags(p)
    _add_common(p)
    p.add_argument("--theta", type=float)
    p.add_argument("--thetas", type=_floats)
    p.add_argument("--t", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=_floats, help="delta schedule for frostman-audit")
    p.add_argument("--offsets", type=int)
    p.add_argument("--planes", type=int)
    p.add_argument("--tolerance", type=float)
    return parser


DEFAULTS = {
    "seed": 0, "theta": 0.5, "mode": "regression", "epsilon": 1.0, "d": 2,
    "tolerance": 0.15, "offsets": 64, "planes": 0, "weight_m": 0,
}


def resolve_config(args):
    """Flags over JSON config over built-in defaults."""
    cfg = dict(DEFAULTS)
    cfg["jobs"] = os.cpu_count() or 1
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key, value in vars(args).items():
        if value is not None and key != "config":
            cfg[key] = value
    cfg["command"] = args.command
    return cfg


def load_set(cfg):
    if cfg.get("set"):
        dset = load_leaves(cfg["set"])
        if cfg.get("depth") is not None and cfg["depth"] < dset.depth:
            dset = dset.truncate(cfg["depth"])
        return dset, os.path.splitext(os.path.basename(cfg["set"]))[0]
    if not cfg.get("kind"):
        raise ConfigError("give --set or --kind")
    if cfg.get("depth") is None:
        raise ConfigError("--kind needs --depth")
    dset = ex.make_set(cfg["kind"], cfg["depth"], p=cfg.get("p"), pattern=cfg.get("pattern"), d=cfg["d"])
    return dset, f"{cfg['kind']}_d{dset.d}_n{dset.depth}"


def _public(cfg):
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


def _header(cfg):
    return ["config: " + json.dumps(_public(cfg), sort_keys=True, default=str)]


def _emit_rows(cfg, rows, columns):
    if cfg.get("out"):
        ex.write_csv(cfg["out"], rows, columns, _public(cfg))
    else:
        sys.stdout.write("# " + _header(cfg)[0] + "\n")
        sys.stdout.write(",".join(columns) + "\n")
        for row in rows:
            sys.stdout.write(",".join(ex.format_value(row[c]) for c in columns) + "\n")


DIM_COLUMNS = ["set_id", "theta", "mode", "estimate", "n_scales", "clamped"]


def cmd_generate(cfg):
    dset, set_id = load_set(cfg)
    out = cfg.get("out") or f"{set_id}.leaves"
    save_leaves(dset, out, _header(cfg))
    print(f"{out}: {dset.n_leaves} leaves")
    return EXIT_OK


def _estimate_row(set_id, est):
    return {"set_id": set_id, "theta": est.theta, "mode": est.aggregation, "estimate": est.value,
            "n_scales": len(est.per_scale), "clamped": est.diagnostics["clamped"]}


def cmd_estimate(cfg):
    dset, set_id = load_set(cfg)
    est = dim_estimate(dset, cfg["theta"], schedule=cfg.get("schedule"), mode=cfg["mode"], epsilon=cfg["epsilon"])
    _emit_rows(cfg, [_estimate_row(set_id, est)], DIM_COLUMNS)
    if cfg.get("scales_out"):
        ex.write_csv(cfg["scales_out"], ex.covering_rows(set_id, est), ex.COVERING_COLUMNS, _public(cfg))
    return EXIT_OK


def cmd_sweep(cfg):
    dset, set_id = load_set(cfg)
    thetas = cfg.get("thetas") or [0.25, 0.5, 0.75, 1.0]
    ests = theta_sweep(dset, thetas, schedule=cfg.get("schedule"), mode=cfg["mode"],
                       jobs=cfg["jobs"], epsilon=cfg["epsilon"])
    _emit_rows(cfg, [_estimate_row(set_id, e) for _, e in ests], DIM_COLUMNS)
    return EXIT_OK


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError("missing required flags: " + ", ".join("--" + k for k in missing))


def cmd_frostman(cfg):
    _require(cfg, "t", "alpha", "delta")
    dset, set_id = load_set(cfg)
    mu, trace = build_joint_frostman(dset, cfg["t"], cfg["alpha"], cfg["theta"], cfg["delta"])
    prof = verify_frostman_profile(mu, cfg["delta"] ** (1 / cfg["theta"]), cfg["delta"], (cfg["t"], cfg["alpha"]))
    out = cfg.get("out") or f"frostman_{set_id}"
    os.makedirs(out, exist_ok=True)
    save_measure(mu, os.path.join(out, "measure.txt"), _header(cfg))
    save_trace(trace, os.path.join(out, "trace.json"))
    with open(os.path.join(out, "profile.json"), "w", newline="\n") as fh:
        json.dump(ex._jsonable(prof), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{out}: levels {trace.coarse_level}..{trace.fine_level}, "
          f"profile c = {prof['fine']['c']:.6g} (fine) / {prof['coarse']['c']:.6g} (coarse)")
    return EXIT_OK


def cmd_energy(cfg):
    _require(cfg, "delta", "t")
    dset, set_id = load_set(cfg)
    if cfg.get("alpha") is not None:
        mu, _ = build_joint_frostman(dset, cfg["t"], cfg["alpha"], cfg["theta"], cfg["delta"])
    else:
        mu = uniform_measure(dset)
    spec = KernelSpec(cfg["delta"], cfg["theta"], cfg["t"], cfg["weight_m"])
    row = {"set_id": set_id, "r": spec.r, "theta": spec.theta, "s": spec.s, "weight_m": spec.weight_m,
           "energy": energy(mu, spec), "capacity_bound": float("nan"), "cover_cost": float("nan")}
    if spec.weight_m == 0:
        row["capacity_bound"] = capacity_lower_bound(mu, spec)
        row["cover_cost"] = optimal_cover_cost(dset, CoveringQuery(spec.s, spec.theta, spec.r ** spec.theta),
                                               clamp=True).cost
    _emit_rows(cfg, [row], list(row))
    return EXIT_OK


def cmd_slice_scan(cfg):
    dset, set_id = load_set(cfg)
    planes = [axis_plane(dset.d, dset.d - 1)]
    rng = np.random.default_rng(cfg["seed"])
    for _ in range(cfg["planes"]):
        planes.append(sample_plane(dset.d, 1, seed=int(rng.integers(2**63))))
    ambient = dim_estimate(dset, cfg["theta"], schedule=cfg.get("schedule"), mode=cfg["mode"]).value
    rows = []
    for plane in planes:
        rep = slice_scan(dset, cfg["theta"], plane, generic_offsets(plane, cfg["offsets"]),
                         schedule=cfg.get("schedule"), tolerance=cfg["tolerance"], mode=cfg["mode"],
                         ambient=ambient, jobs=cfg["jobs"])
        rows.extend(rep.rows(set_id))
    _emit_rows(cfg, rows, ex.SLICE_COLUMNS)
    return EXIT_OK


def cmd_study(cfg):
    name = cfg["name"]
    jobs = cfg["jobs"]
    if name == "cp-calibration":
        thetas = cfg.get("thetas") or ([cfg["theta"]] if "theta" in cfg["_given"] else [0.25, 0.5, 1.0])
        report = ex.run_cp_calibration(
            p=cfg.get("p") or 0.5, thetas=thetas, depth=cfg.get("depth") or 14,
            n_offsets=cfg["offsets"] if "offsets" in cfg["_given"] else 0, jobs=jobs,
        )
    elif name == "frostman-audit":
        dset, set_id = load_set(cfg) if (cfg.get("set") or cfg.get("kind")) else (
            ex.make_set("sequence-strip", cfg.get("depth") or 13, p=1.0), "sequence_strip_p1")
        report = ex.run_frostman_audit(
            dset, cfg.get("t") or 1.2, cfg.get("alpha") or 0.9, cfg["theta"] if "theta" in cfg["_given"] else 0.6,
            cfg.get("delta") or [2.0**-6, 2.0**-7, 2.0**-8], set_id=set_id, seed=cfg["seed"],
            energy_level=min(9, dset.depth),
        )
    else:
        report = ex.run_lower_bound_study(
            p=cfg.get("p") or 1.0, theta=cfg["theta"] if "theta" in cfg["_given"] else 1.0,
            depth=cfg.get("depth") or 14, n_planes=1 + cfg["planes"], n_offsets=cfg["offsets"],
            tolerance=cfg["tolerance"], jobs=jobs,
        )
    out = cfg.get("out") or f"study_{name}"
    ex.write_study(report, out, _public(cfg))
    for key, ok in report.get("checks", {}).items():
        print(f"{name}: {key}: {'PASS' if ok else 'FAIL'}")
    if "calibration" in report.get("tables", {}):
        for row in report["tables"]["calibration"]:
            print(f"theta={row['theta']:g} estimate={row['estimate']:.4f} formula={row['formula']:.4f}")
    return EXIT_OK if report.get("passed") else EXIT_FAILED


COMMANDS = {
    "generate": cmd_generate,
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
    "frostman": cmd_frostman,
    "energy": cmd_energy,
    "slice-scan": cmd_slice_scan,
    "study": cmd_study,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        cfg["_given"] = {k for k, v in vars(args).items() if v is not None}
        if cfg["jobs"] < 1:
            raise ConfigError("--jobs must be positive")
        return COMMANDS[args.command](cfg)
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except (ConfigError, DomainError, OverLimitError, ThetaDimError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
