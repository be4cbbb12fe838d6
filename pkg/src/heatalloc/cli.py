"""Command-line front end.

Commands: simulate, estimate, evaluate, lcurve, sensitivity, report.
Exit codes: 0 success, 1 computation error, 2 usage or configuration
error. Set HEATALLOC_LOG to control the log level.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys

from . import io, pipeline
from .domain import HCA, STV, validate_dataset
from .estimator import DegenerateLCurveError, assemble, lcurve_select, solve_rls
from .simulator import ScenarioConfig, prior_vector, simulate_season

log = logging.getLogger("heatalloc")

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2

INDICATOR_ROWS = (
    ("sigma_e_pct", "sigma_e"), ("max_e_pct", "max_e"),
    ("min_e_pct", "min_e"), ("mape_pct", "mape"), ("p_l_pct", "p_l"),
    ("delta_e_hca_pct", "delta_e_hca"), ("mean_u_e_pct", "mean_u_e"),
    ("u_g_pct", "u_g"),
)


class UsageError(Exception):
    pass


class ComputeError(Exception):
    pass


def _load_scenario(path: str, seed) -> ScenarioConfig:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    payload = io.read_json(path)
    fields = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(payload) - fields
    if unknown:
        raise UsageError(f"unknown scenario fields: {sorted(unknown)}")
    if "deviation_range" in payload:
        payload["deviation_range"] = tuple(payload["deviation_range"])
    cfg = ScenarioConfig(**payload)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(f"invalid scenario config: {exc}") from exc
    return cfg


def _load_dataset(path: str):
    if not os.path.isdir(path):
        raise UsageError(f"dataset directory not found: {path}")
    dataset = io.read_dataset(path)
    violations = validate_dataset(dataset)
    if violations:
        lines = "\n".join(f"  {v}" for v in violations)
        raise ComputeError(f"dataset validation failed:\n{lines}")
    return dataset


def _apply_subsets(dataset, subsets_path):
    if subsets_path is None:
        return dataset
    if not os.path.exists(subsets_path):
        raise UsageError(f"subsets file not found: {subsets_path}")
    mapping = io.read_json(subsets_path)
    known = {r.id for r in dataset.radiators}
    unknown = set(mapping) - known
    if unknown:
        raise ComputeError(f"subsets file references unknown radiators: "
                           f"{sorted(unknown)}")
    radiators = tuple(
        dataclasses.replace(r, subset_id=mapping.get(r.id, r.subset_id))
        for r in dataset.radiators)
    return dataclasses.replace(dataset, radiators=radiators)


def _parse_lambda(text):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError as exc:
        raise UsageError(f"invalid --lambda value: {text!r}") from exc
    if value < 0:
        raise UsageError("--lambda must be >= 0 or 'auto'")
    return value


def cmd_simulate(args) -> int:
    cfg = _load_scenario(args.config, args.seed)
    dataset, truth = simulate_season(cfg)
    os.makedirs(args.out, exist_ok=True)
    io.write_dataset(dataset, args.out)
    io.write_json(os.path.join(args.out, "ground_truth.json"),
                  truth.to_dict())
    total = sum(dataset.total_energy_per_period)
    print(f"simulated {len(dataset.periods)} periods, "
          f"{len(dataset.radiators)} radiators, {total:.2f} kWh total")
    return EXIT_OK


def cmd_estimate(args) -> int:
    dataset = _load_dataset(args.data)
    sm = assemble(dataset, args.method)
    theta0 = prior_vector(dataset, args.method)
    lam = _parse_lambda(args.lam)
    points = None
    if lam == "auto" or args.lcurve:
        lam_star, points = lcurve_select(sm, theta0)
        if lam == "auto":
            lam = lam_star
    result = solve_rls(sm, theta0, lam)
    os.makedirs(args.out, exist_ok=True)
    io.write_json(os.path.join(args.out, "estimate.json"), result.to_dict())
    if points is not None:
        io.write_lcurve_csv(points, os.path.join(args.out, "lcurve.csv"))
    flags = (f", negative components at {list(result.negative_components)}"
             if result.negative_components else "")
    print(f"estimated {sm.n_radiators} parameters from {sm.n_periods} "
          f"samplings at lambda={result.lam:g}{flags}")
    return EXIT_OK


def cmd_lcurve(args) -> int:
    dataset = _load_dataset(args.data)
    sm = assemble(dataset, args.method)
    theta0 = prior_vector(dataset, args.method)
    lam_star, points = lcurve_select(sm, theta0)
    os.makedirs(args.out, exist_ok=True)
    io.write_lcurve_csv(points, os.path.join(args.out, "lcurve.csv"))
    print(f"lambda* = {lam_star:g}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    dataset = _load_dataset(args.data)
    dataset = _apply_subsets(dataset, args.subsets)
    gt_path = os.path.join(args.data, "ground_truth.json")
    if not os.path.exists(gt_path):
        raise UsageError(f"ground truth not found: {gt_path}")
    truth = io.read_json(gt_path)
    order = {rid: i for i, rid in enumerate(truth["radiator_ids"])}
    season = [0.0] * len(order)
    for row in truth["energies_kwh"]:
        for i, v in enumerate(row):
            season[i] += v
    reference = [season[order[r.id]] for r in dataset.radiators]

    methods = tuple(args.methods.split(","))
    unknown = set(methods) - set(pipeline.ALL_METHODS)
    if unknown:
        raise UsageError(f"unknown methods: {sorted(unknown)}")
    lam = _parse_lambda(args.lam)
    evals = pipeline.evaluate_methods(dataset, reference, methods=methods,
                                      lam=lam)
    os.makedirs(args.out, exist_ok=True)
    payload = {"schema_version": 1, "methods": {}}
    for label, ev in evals.items():
        payload["methods"][label] = {
            "report": ev.report.to_dict(),
            "budget": ev.budget.to_dict(),
            "estimate": ev.estimate.to_dict() if ev.estimate else None,
        }
        io.write_report_csv(ev.report,
                            os.path.join(args.out, f"report_{label}.csv"))
    io.write_json(os.path.join(args.out, "evaluation.json"), payload)
    _write_comparison(payload, os.path.join(args.out, "comparison.csv"))
    print(f"evaluated {len(evals)} methods over "
          f"{len(next(iter(evals.values())).report.subset_ids)} subsets")
    return EXIT_OK


def _write_comparison(payload, path):
    labels = list(payload["methods"].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["indicator"] + labels)
        for key, name in INDICATOR_ROWS:
            row = [name]
            for label in labels:
                v = payload["methods"][label]["report"]["globals"][key]
                row.append("" if v is None else io.fmt(v))
            writer.writerow(row)


def cmd_sensitivity(args) -> int:
    cfg = _load_scenario(args.config, args.seed)
    try:
        levels = [float(x) for x in args.levels.split(",")]
    except ValueError as exc:
        raise UsageError(f"invalid --levels: {args.levels!r}") from exc
    lam = _parse_lambda(args.lam)
    rows = pipeline.sensitivity_suite(cfg, args.axis, levels, lam=lam)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"sensitivity_{args.axis}.csv")
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (io.fmt(v) if isinstance(v, float) else v)
                             for k, v in row.items()})
    print(f"wrote {len(rows)} sensitivity rows to {out_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    if not os.path.exists(args.eval):
        raise UsageError(f"evaluation file not found: {args.eval}")
    payload = io.read_json(args.eval)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "comparison.csv")
    _write_comparison(payload, path)
    labels = list(payload["methods"].keys())
    print("indicator " + " ".join(f"{label:>14s}" for label in labels))
    for key, name in INDICATOR_ROWS:
        cells = []
        for label in labels:
            v = payload["methods"][label]["report"]["globals"][key]
            cells.append(f"{v:14.4g}" if v is not None else " " * 14)
        print(f"{name:9s} " + " ".join(cells))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatalloc",
        description="Radiator thermal-parameter calibration and heat "
                    "allocation evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic season")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="calibrate radiator parameters")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=(HCA, STV), default=HCA)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--lcurve", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("lcurve", help="trace the L-curve and pick lambda")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=(HCA, STV), default=HCA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lcurve)

    p = sub.add_parser("evaluate", help="score allocation methods")
    p.add_argument("--data", required=True)
    p.add_argument("--methods", default=",".join(pipeline.ALL_METHODS))
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--subsets", default=None)
    p.add_argument("--baseline", default=pipeline.METHOD_HCA_NOMINAL,
                   choices=(pipeline.METHOD_HCA_NOMINAL,))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sensitivity", help="sweep one sensitivity axis")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--axis", required=True,
                   choices=("frequency", "heat_loss", "prior_offset"))
    p.add_argument("--levels", required=True)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("report", help="render a comparison table")
    p.add_argument("--eval", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("HEATALLOC_LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ComputeError, DegenerateLCurveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
