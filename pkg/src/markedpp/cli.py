"""Command-line entry points.

Subcommands: simulate, fit, compare, simstudy, basis, cluster, export.
Runs are configured by a JSON file plus flag overrides; --seed is
mandatory wherever sampling happens. Text output rounds to 6
significant digits; JSON artifacts keep full precision.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .basis import compute_basis_set, estimate_intensity_matrices, save_basis_set
from .cluster import FeatureTable, cut_tree, ward_cluster
from .court import court_grid
from .grid import Domain, DomainGrid, atomic_writer
from .intensity import CovariateStack, IntensityParams, simulate_nhpp, write_points_csv
from .joint import ModelParams
from .mark import IntensityLink, LINK_MODES
from .pipeline import (RunConfig, atomic_write_text, dump_json, export_surfaces,
                       fit, two_stage_fit)
from .selection import compare_xi_models, comparison_table
from .shotdata import load_shot_csv
from .simstudy import SimDesign, format_report, report_to_csv, run_design


def g6(x: float) -> str:
    return f"{x:.6g}"


def _add_chain_flags(p: argparse.ArgumentParser, iters=60_000, burnin=20_000,
                     thin=10) -> None:
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--burnin", type=int, default=burnin)
    p.add_argument("--thin", type=int, default=thin)
    p.add_argument("--link", choices=LINK_MODES, default="max_normalized")


def _run_config(args, out_dir=None) -> RunConfig:
    overrides = {
        "data_csv": args.data,
        "seed": args.seed,
        "n_iter": args.iters,
        "n_burnin": args.burnin,
        "thin": args.thin,
        "link": args.link,
        "xi_enabled": not args.xi_zero,
        "out_dir": out_dir if out_dir is not None else args.out,
    }
    if args.basis_dir:
        overrides["basis_dir"] = args.basis_dir
    if args.bases:
        overrides["intensity_bases"] = tuple(args.bases.split(","))
    if args.mark_cols:
        overrides["mark_columns"] = tuple(args.mark_cols.split(","))
    if args.config:
        return RunConfig.from_json(args.config, **overrides)
    return RunConfig(**overrides)


def cmd_simulate(args) -> int:
    dom = Domain(*args.domain)
    grid = DomainGrid(dom, args.grid[0], args.grid[1])
    if args.covariates == "coords":
        covs = CovariateStack.coordinates(grid)
        beta = np.asarray([float(b) for b in args.beta.split(",")])
    else:
        covs = CovariateStack.empty(grid)
        beta = np.zeros(0)
    params = IntensityParams(args.lambda0, beta, args.scale)
    pts = simulate_nhpp(params, covs, rng=args.seed)
    write_points_csv(pts, args.out, meta={"seed": args.seed})
    print(f"wrote {len(pts)} points to {args.out}")
    return 0


def cmd_fit(args) -> int:
    config = _run_config(args)
    if args.two_stage:
        result = two_stage_fit(config)
        dropped = list(result.dropped_bases) + list(result.dropped_mark)
        if result.xi_dropped:
            dropped.append("xi")
        print("stage-1 drops:", ", ".join(dropped) if dropped else "none")
        final = result.final
    else:
        final = fit(config)
    print(f"n = {final.pattern.n} (dropped {final.n_dropped_rows} rows)")
    for name in final.summary.columns:
        row = final.summary.row(name)
        print(f"{name:<22} mean {g6(row['mean']):>10} sd {g6(row['sd']):>10} "
              f"ci ({g6(row['ci_low'])}, {g6(row['ci_high'])})")
    print(f"DIC {g6(final.criteria.dic_joint)}  "
          f"LPML {g6(final.criteria.lpml_joint)}")
    if not final.converged:
        worst = max(v["split_rhat"] for v in final.diagnostics.values())
        print(f"warning: split-rhat {g6(worst)} exceeds 1.1; "
              f"chain may not have converged", file=sys.stderr)
        return 3
    return 0


def cmd_compare(args) -> int:
    config = _run_config(args)
    pattern, covs, _ = _compare_inputs(config)
    cmp = compare_xi_models(pattern, covs, config.prior,
                            config.chain_config(),
                            IntensityLink(config.link), config.scale)
    print(comparison_table(cmp))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        atomic_write_text(os.path.join(args.out, "comparison.json"),
                          dump_json({"config_hash": config.config_hash(),
                                     "seed": config.seed,
                                     **cmp.to_dict()}))
    return 0


def _compare_inputs(config: RunConfig):
    from .pipeline import _build_inputs

    return _build_inputs(config)


def cmd_simstudy(args) -> int:
    preset = SimDesign.desk_scale if args.preset == "desk" else SimDesign.full_scale
    design = preset(
        lambda0=args.lambda0, alpha1=args.alpha1, z2_kind=args.z2,
        master_seed=args.seed, link=IntensityLink(args.link))
    if args.replicates:
        design = SimDesign(**{**design.__dict__, "n_replicates": args.replicates})
    if args.iters:
        design = SimDesign(**{**design.__dict__, "n_iter": args.iters,
                              "n_burnin": args.burnin or args.iters // 2})
    report = run_design(design, n_jobs=args.jobs)
    print(format_report(report))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report_to_csv(report, os.path.join(args.out, "recovery.csv"))
        per_rep = os.path.join(args.out, "design.json")
        atomic_write_text(per_rep, dump_json({
            "design": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in design.__dict__.items()
                       if k not in ("link", "prior")},
            "link": design.link.mode,
            "prior": design.prior.to_dict(),
            "n_ok": report.n_ok,
            "n_failed": report.n_failed,
            "mark_rates": report.mark_rates,
            "warnings": report.warnings,
        }))
    return 0


def cmd_basis(args) -> int:
    player_points = {}
    for name in sorted(os.listdir(args.players_dir)):
        if not name.endswith(".csv"):
            continue
        loaded = load_shot_csv(os.path.join(args.players_dir, name))
        player_points[name[:-4]] = loaded.pattern.locations
    if not player_points:
        print(f"no player CSVs found in {args.players_dir}", file=sys.stderr)
        return 2
    grid = court_grid()
    mats = estimate_intensity_matrices(player_points, grid,
                                       min_shots=args.min_shots,
                                       bandwidth=args.bandwidth)
    if not mats.players:
        print("no player passed the min-shots filter", file=sys.stderr)
        return 2
    basis_set = compute_basis_set(mats, rank=args.rank,
                                  n_iter=args.nmf_iters, seed=args.seed)
    save_basis_set(basis_set, args.out)
    print(f"wrote {basis_set.rank} bases from {len(mats.players)} players "
          f"to {args.out}")
    return 0


def cmd_cluster(args) -> int:
    with open(args.features, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    ids = tuple(r[0] for r in rows)
    feats = np.asarray([[float(v) for v in r[1:]] for r in rows])
    table = FeatureTable(ids, feats, tuple(header[1:]))
    if args.zscore:
        table = table.zscored()
    dend = ward_cluster(table)
    labels = cut_tree(dend, args.k)
    os.makedirs(args.out, exist_ok=True)
    dend.to_json(os.path.join(args.out, "dendrogram.json"))
    with atomic_writer(os.path.join(args.out, "labels.csv")) as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cluster"])
        for pid, lab in zip(ids, labels):
            writer.writerow([pid, int(lab)])
    atomic_write_text(os.path.join(args.out, "dendrogram.newick"),
                      dend.to_newick(ids) + "\n")
    print(f"clustered {len(ids)} rows into {args.k} groups -> {args.out}")
    return 0


def cmd_export(args) -> int:
    with open(args.params) as fh:
        doc = json.load(fh)
    params = ModelParams.from_dict(doc.get("params", doc))
    pattern = load_shot_csv(args.data).pattern if args.data else None
    if args.basis_dir:
        from .basis import basis_covariates, load_basis_set

        covs = basis_covariates(load_basis_set(args.basis_dir))
        if args.bases:
            covs = covs.subset(args.bases.split(","))
    else:
        covs = CovariateStack.empty(court_grid())
    labels = args.mark_labels.split(",") if args.mark_labels else ["intercept"]
    scaled = tuple(lab == "intensity_x_3pt" for lab in labels)
    export_surfaces(params, covs, IntensityLink(args.link), labels, scaled,
                    args.out, pattern=pattern, score_mode=args.score,
                    meta={"seed": doc.get("seed", "n/a"),
                          "config_hash": doc.get("config_hash", "n/a")})
    print(f"wrote intensity.csv, theta.csv, score.csv to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markedpp",
        description="Bayesian marked point process modeling of shot charts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate point locations")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--beta", default="2,1")
    p.add_argument("--scale", type=float, default=100.0)
    p.add_argument("--covariates", choices=("none", "coords"), default="coords")
    p.add_argument("--grid", type=int, nargs=2, default=(100, 100))
    p.add_argument("--domain", type=float, nargs=4,
                   default=(-1.0, 1.0, -1.0, 1.0))
    p.set_defaults(handler=cmd_simulate)

    for name, handler, two_stage in (("fit", cmd_fit, True),
                                     ("compare", cmd_compare, False)):
        p = sub.add_parser(name, help=f"{name} a shot-chart model")
        p.add_argument("--data", required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--config", help="JSON run config; flags override it")
        p.add_argument("--basis-dir")
        p.add_argument("--bases", help="comma-separated basis names")
        p.add_argument("--mark-cols", help="comma-separated mark column groups")
        p.add_argument("--xi-zero", action="store_true")
        p.add_argument("--out")
        _add_chain_flags(p)
        if two_stage:
            p.add_argument("--two-stage", action="store_true")
        p.set_defaults(handler=handler)

    p = sub.add_parser("simstudy", help="parameter-recovery study")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--alpha1", type=float, default=0.8)
    p.add_argument("--z2", choices=("normal", "bernoulli"), default="normal")
    p.add_argument("--replicates", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--link", choices=LINK_MODES, default="max_normalized")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_simstudy)

    p = sub.add_parser("basis", help="build basis covariates from player CSVs")
    p.add_argument("--players-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--nmf-iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-shots", type=int, default=50)
    p.add_argument("--bandwidth", type=float)
    p.set_defaults(handler=cmd_basis)

    p = sub.add_parser("cluster", help="Ward clustering of coefficient vectors")
    p.add_argument("--features", required=True,
                   help="CSV: id column then feature columns")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--zscore", action="store_true")
    p.set_defaults(handler=cmd_cluster)

    p = sub.add_parser("export", help="export fitted surfaces as grid CSVs")
    p.add_argument("--params", required=True,
                   help="params_mean.json from a fit")
    p.add_argument("--out", required=True)
    p.add_argument("--data")
    p.add_argument("--basis-dir")
    p.add_argument("--bases")
    p.add_argument("--mark-labels", help="comma-separated fitted mark labels")
    p.add_argument("--link", choices=LINK_MODES, default="max_normalized")
    p.add_argument("--score", choices=("points", "rate"), default="points")
    p.set_defaults(handler=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
