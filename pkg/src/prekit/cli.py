"""Command line entry point.

Verbs:
  run            config -> report.json / iterations.csv / timings.json
  summarize      report.json -> formatted tables on stdout
  inspect-model  fit one iteration and print active rules with coefficients
  generate       emit an oracle-labeled generated dataset as CSV

Errors exit nonzero with a one-line JSON record on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .boosting import fit_boost
from .data import split_half
from .experiment import (ExperimentConfig, report_json_bytes, run_experiment,
                         run_iteration, summarize)
from .lasso import cv_lasso
from .rules import build_term_matrix, dedup_and_decollinearize, extract_rules
from .surrogate import GenConfig, make_generated, nested_select, surrogate_select


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_yaml(args.config)
    if getattr(args, "profile", None):
        cfg.apply_profile(args.profile)
    for name in ("n_iterations", "master_seed", "jobs"):
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "output", None):
        cfg.output_dir = args.output
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_experiment(cfg)
    if cfg.output_dir:
        print(f"report written to {Path(cfg.output_dir) / 'report.json'}")
    else:
        sys.stdout.buffer.write(report_json_bytes(result.report))
    return 0


def _cmd_summarize(args) -> int:
    with open(args.report) as fh:
        report = json.load(fh)
    timings = None
    tpath = Path(args.report).with_name("timings.json")
    if tpath.exists():
        with open(tpath) as fh:
            timings = json.load(fh)
    print(summarize(report, timings))
    return 0


def _cmd_inspect_model(args) -> int:
    cfg = _load_config(args)
    data = cfg.dataset.load()
    seeds = np.random.SeedSequence(cfg.master_seed, spawn_key=(args.iteration,))
    split_seed, boost_seed, gen_seed, lasso_seed = (
        int(s) for s in seeds.generate_state(4))
    pair = split_half(data, split_seed)
    train = pair.train
    boost_cfg = dataclasses.replace(cfg.boost, seed=boost_seed)
    model = fit_boost(train, boost_cfg)
    rules = dedup_and_decollinearize(extract_rules(model), train)
    tm = build_term_matrix(rules, train, cfg.include_linear_terms)
    family = ("binomial" if train.task == "binary_classification"
              else "gaussian")
    lasso_cfg = dataclasses.replace(cfg.lasso, seed=lasso_seed)
    gen_cfg = GenConfig(cfg.gen.n_gen, gen_seed, cfg.gen.label_mode)
    if args.method == "regular":
        fit = cv_lasso(tm.values, train.outcome_values(), lasso_cfg,
                       family=family, term_names=tm.names)
    elif args.method == "surrogate":
        fit = surrogate_select(tm, train, model, gen_cfg, lasso_cfg).fit
    else:
        fit = nested_select(tm, train, model, gen_cfg, lasso_cfg,
                            family=family).fit
    print(f"method: {args.method}   lambda: {fit.lambda_chosen:.6g}   "
          f"terms: {fit.n_terms}")
    print(f"(intercept)  {fit.intercept:+.6g}")
    for name, coef in sorted(fit.coefficients.items(),
                             key=lambda kv: -abs(kv[1])):
        print(f"{coef:+12.6g}  {name}")
    return 0


def _cmd_generate(args) -> int:
    cfg = _load_config(args)
    data = cfg.dataset.load()
    pair = split_half(data, args.seed)
    model = fit_boost(pair.train, dataclasses.replace(cfg.boost, seed=args.seed))
    gen_cfg = GenConfig(args.n_gen or cfg.gen.n_gen, args.seed,
                        cfg.gen.label_mode)
    gen = make_generated(pair.train, model, gen_cfg)
    out = gen.features
    label_col = gen.provenance["label_mode"]
    path = args.output or "generated.csv"
    import csv as _csv
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow([c.name for c in out.columns] + [f"oracle_{label_col}"])
        for i in range(out.n_rows):
            w.writerow([c.cell_str(i) for c in out.columns] +
                       [repr(float(gen.oracle_labels[i]))])
    print(f"wrote {out.n_rows} generated rows to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prekit", description="prediction rule ensembles with "
        "surrogate-data rule selection")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--profile", choices=["desk", "paper"])
    run.add_argument("--n-iterations", type=int, dest="n_iterations")
    run.add_argument("--master-seed", type=int, dest="master_seed")
    run.add_argument("--jobs", type=int)
    run.add_argument("--output")
    run.set_defaults(func=_cmd_run)

    summ = sub.add_parser("summarize", help="print tables for a report.json")
    summ.add_argument("report")
    summ.set_defaults(func=_cmd_summarize)

    insp = sub.add_parser("inspect-model",
                          help="print the rules and coefficients of one fit")
    insp.add_argument("--config", required=True)
    insp.add_argument("--profile", choices=["desk", "paper"])
    insp.add_argument("--method", default="regular",
                      choices=["regular", "surrogate", "nested"])
    insp.add_argument("--iteration", type=int, default=0)
    insp.add_argument("--master-seed", type=int, dest="master_seed")
    insp.set_defaults(func=_cmd_inspect_model)

    gen = sub.add_parser("generate", help="emit a generated dataset as CSV")
    gen.add_argument("--config", required=True)
    gen.add_argument("--profile", choices=["desk", "paper"])
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-gen", type=int, dest="n_gen")
    gen.add_argument("--output")
    gen.set_defaults(func=_cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
