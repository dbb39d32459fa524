"""Experiment harness: config, seeded iteration loop, reports.

Each iteration splits the data in half, fits the boosting model on the
training half, harvests and filters rules, then runs the requested
selection methods (regular, surrogate, nested) and evaluates everything on
the held-out half. Per-iteration seeds derive from the master seed and the
iteration index, so reports are pure functions of (config, data) and safe
to compute in parallel. Wall-clock timings are kept out of the canonical
report so that repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import evaluation as ev
from .boosting import BoostConfig, fit_boost
from .data import Dataset, drop_missing, load_csv, split_half
from .lasso import LassoConfig, cv_lasso
from .rules import TermMatrix, build_term_matrix, dedup_and_decollinearize, extract_rules
from .surrogate import GenConfig, nested_select, surrogate_select
from .tree import TreeConfig

LASSO_METHODS = ("regular", "surrogate", "nested")
ALL_METHODS = ("boosting",) + LASSO_METHODS

PROFILES = {
    "desk": {"n_iterations": 20, "n_trees": 100, "n_gen": 2000},
    "paper": {"n_iterations": 200, "n_trees": 500, "n_gen": 10_000},
}


class ExperimentError(ValueError):
    pass


@dataclass
class DatasetSpec:
    path: str
    outcome: str
    task: str
    categorical: list[str] = field(default_factory=list)

    def load(self) -> Dataset:
        schema = {name: "categorical" for name in self.categorical}
        if self.task == "binary_classification":
            schema.setdefault(self.outcome, "categorical")
        d = load_csv(self.path, schema, self.outcome, self.task)
        return drop_missing(d)


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec
    simulate: bool = False
    include_linear_terms: bool = True
    n_iterations: int = 20
    methods: tuple[str, ...] = ALL_METHODS
    master_seed: int = 0
    boost: BoostConfig = field(default_factory=lambda: BoostConfig(n_trees=100))
    gen: GenConfig = field(default_factory=lambda: GenConfig(n_gen=2000))
    lasso: LassoConfig = field(default_factory=LassoConfig)
    output_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ExperimentError(f"unknown methods: {sorted(unknown)}")

    def apply_profile(self, name: str) -> None:
        if name not in PROFILES:
            raise ExperimentError(f"unknown profile {name!r}")
        p = PROFILES[name]
        self.n_iterations = p["n_iterations"]
        self.boost.n_trees = p["n_trees"]
        self.gen.n_gen = p["n_gen"]

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        ds = raw["dataset"]
        spec = DatasetSpec(
            path=ds["path"],
            outcome=ds["outcome"],
            task=ds["task"],
            categorical=list(ds.get("categorical", [])),
        )
        boost_raw = dict(raw.get("boost", {}))
        tree_cfg = TreeConfig(**boost_raw.pop("tree", {}))
        boost = BoostConfig(tree=tree_cfg, **boost_raw)
        gen = GenConfig(**raw.get("gen", {}))
        lasso = LassoConfig(**raw.get("lasso", {}))
        return ExperimentConfig(
            dataset=spec,
            simulate=bool(raw.get("simulate", False)),
            include_linear_terms=bool(raw.get("include_linear_terms", True)),
            n_iterations=int(raw.get("n_iterations", 20)),
            methods=tuple(raw.get("methods", ALL_METHODS)),
            master_seed=int(raw.get("master_seed", 0)),
            boost=boost,
            gen=gen,
            lasso=lasso,
            output_dir=raw.get("output_dir"),
            jobs=int(raw.get("jobs", 1)),
        )

    @staticmethod
    def from_yaml(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig.from_dict(yaml.safe_load(fh))

    def describe(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        d.pop("jobs", None)        # execution detail, not part of the result
        d.pop("output_dir", None)
        return d


def _iteration_seeds(master_seed: int, i: int) -> dict[str, int]:
    state = np.random.SeedSequence(master_seed, spawn_key=(i,)).generate_state(5)
    names = ("sim", "split", "boost", "gen", "lasso")
    return {name: int(s) for name, s in zip(names, state)}


def _predict_fit(fit, X, task: str) -> np.ndarray:
    """Test predictions for a lasso fit; surrogate logit fits and binomial
    fits both classify by thresholding the linear predictor at 0."""
    raw = fit.predict(X)
    if task == "binary_classification":
        return (raw > 0).astype(np.float64)
    return raw


def _method_record(fit, tm: TermMatrix, pred, y_test, task, feature_names,
                   sim_spec) -> dict:
    rec = {
        "accuracy": ev.accuracy(pred, y_test, task),
        "n_terms": fit.n_terms,
        "quality_per_term": (ev.quality_per_term(pred, y_test, fit.n_terms, task)
                             if fit.n_terms > 0 else None),
        "selected_features": sorted(ev.selected_features(fit, tm)),
        "importances": ev.variable_importances(fit, tm, feature_names),
    }
    if sim_spec is not None:
        tpr, fpr = ev.selection_rates(set(rec["selected_features"]), sim_spec,
                                      feature_names)
        rec["tpr"] = tpr
        rec["fpr"] = fpr
        rec["importance_slope_corr"] = ev.importance_slope_correlation(
            rec["importances"], sim_spec)
    return rec


def run_iteration(cfg: ExperimentConfig, data: Dataset, i: int) -> dict:
    seeds = _iteration_seeds(cfg.master_seed, i)
    timings: dict[str, float] = {}

    d = data
    sim_spec = None
    if cfg.simulate:
        d, sim_spec = ev.simulate_outcome(data, seeds["sim"])
    pair = split_half(d, seeds["split"])
    train, test = pair.train, pair.test
    task = d.task
    feature_names = d.feature_names
    y_test = test.outcome_values()

    t0 = time.perf_counter()
    boost_cfg = dataclasses.replace(cfg.boost, seed=seeds["boost"])
    model = fit_boost(train, boost_cfg)
    all_rules = extract_rules(model)
    kept = dedup_and_decollinearize(all_rules, train)
    tm = build_term_matrix(kept, train, cfg.include_linear_terms)
    timings["boosting"] = time.perf_counter() - t0

    X_test = tm.evaluate(test)
    y_train = train.outcome_values()
    family = "binomial" if task == "binary_classification" else "gaussian"
    lasso_cfg = dataclasses.replace(cfg.lasso, seed=seeds["lasso"])
    gen_cfg = GenConfig(cfg.gen.n_gen, seeds["gen"], cfg.gen.label_mode)

    methods: dict[str, dict] = {}
    if "boosting" in cfg.methods:
        pred = (model.predict_class(test) if task == "binary_classification"
                else model.predict(test))
        methods["boosting"] = {
            "accuracy": ev.accuracy(pred, y_test, task),
            "n_terms": len(all_rules),
            "quality_per_term": None,
            "selected_features": sorted({f for r in kept for f in r.features}),
        }

    if "regular" in cfg.methods:
        t0 = time.perf_counter()
        fit = cv_lasso(tm.values, y_train, lasso_cfg, family=family,
                       term_names=tm.names)
        pred = _predict_fit(fit, X_test, task)
        methods["regular"] = _method_record(fit, tm, pred, y_test, task,
                                            feature_names, sim_spec)
        timings["regular"] = time.perf_counter() - t0

    if "surrogate" in cfg.methods:
        t0 = time.perf_counter()
        res = surrogate_select(tm, train, model, gen_cfg, lasso_cfg)
        sub = tm.restrict(res.survivors)
        pred = _predict_fit(res.fit, sub.evaluate(test), task)
        rec = _method_record(res.fit, sub, pred, y_test, task, feature_names,
                             sim_spec)
        rec["level1_survivors"] = [int(j) for j in res.survivors]
        rec["active_terms"] = [int(j) for j in res.active_terms]
        methods["surrogate"] = rec
        timings["surrogate"] = time.perf_counter() - t0

    if "nested" in cfg.methods:
        t0 = time.perf_counter()
        res = nested_select(tm, train, model, gen_cfg, lasso_cfg, family=family)
        sub = tm.restrict(res.survivors)
        pred = _predict_fit(res.fit, sub.evaluate(test), task)
        rec = _method_record(res.fit, sub, pred, y_test, task, feature_names,
                             sim_spec)
        rec["level1_survivors"] = [int(j) for j in res.survivors]
        rec["active_terms"] = [int(j) for j in res.active_terms]
        methods["nested"] = rec
        timings["nested"] = time.perf_counter() - t0

    result = {"iteration": i, "methods": methods, "n_rules": len(all_rules),
              "n_rules_kept": len(kept), "n_terms_total": tm.n_terms}
    if sim_spec is not None:
        result["sim"] = {"features": list(sim_spec.features),
                         "slopes": list(sim_spec.slopes)}
    return result, timings


def _iteration_worker(args):
    cfg, data, i = args
    try:
        result, timings = run_iteration(cfg, data, i)
        return i, result, timings, None
    except Exception as exc:  # noqa: BLE001 - iteration failures are logged
        return i, None, {}, f"{type(exc).__name__}: {exc}"


@dataclass
class ExperimentReport:
    report: dict
    timings: dict

    def save(self, output_dir) -> None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_bytes(report_json_bytes(self.report))
        with open(out / "timings.json", "w") as fh:
            json.dump(self.timings, fh, indent=2, sort_keys=True)
        _write_iterations_csv(out / "iterations.csv", self.report)


def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode()


def _write_iterations_csv(path, report: dict) -> None:
    fields = ["iteration", "method", "accuracy", "n_terms", "quality_per_term",
              "tpr", "fpr", "importance_slope_corr"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for it in report["iterations"]:
            for method, rec in sorted(it["methods"].items()):
                w.writerow([it["iteration"], method] +
                           [rec.get(f) for f in fields[2:]])


def _mean_sd(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "sd": sd, "n": int(arr.size)}


def _collect(iterations, method, key):
    vals = []
    for it in iterations:
        rec = it["methods"].get(method)
        if rec is None or rec.get(key) is None:
            continue
        vals.append(rec[key])
    return vals


def _aggregate(cfg: ExperimentConfig, iterations: list[dict],
               excluded: list[dict]) -> dict:
    excluded_ids = {e["iteration"] for e in excluded}
    included = [it for it in iterations if it["iteration"] not in excluded_ids]
    methods = [m for m in ALL_METHODS if m in cfg.methods]

    summary = {}
    for m in methods:
        entry = {}
        for key in ("accuracy", "n_terms", "quality_per_term", "tpr", "fpr",
                    "importance_slope_corr"):
            vals = _collect(included, m, key)
            if vals:
                entry[key] = _mean_sd(vals)
        summary[m] = entry

    lasso_present = [m for m in LASSO_METHODS if m in methods]
    winners = {}
    if lasso_present and included:
        best_acc = (max if cfg.dataset.task == "binary_classification"
                    and not cfg.simulate else min)
        acc_means = {m: summary[m]["accuracy"]["mean"] for m in lasso_present
                     if "accuracy" in summary[m]}
        if acc_means:
            winners["accuracy"] = best_acc(acc_means, key=acc_means.get)
        term_means = {m: summary[m]["n_terms"]["mean"] for m in lasso_present
                      if "n_terms" in summary[m]}
        if term_means:
            winners["n_terms"] = min(term_means, key=term_means.get)
        q_means = {m: summary[m]["quality_per_term"]["mean"]
                   for m in lasso_present if "quality_per_term" in summary[m]}
        if q_means:
            winners["quality_per_term"] = max(q_means, key=q_means.get)

    pairwise = []
    for ai in range(len(methods)):
        for bi in range(ai + 1, len(methods)):
            a, b = methods[ai], methods[bi]
            for key in ("accuracy", "n_terms", "quality_per_term"):
                va = _collect(included, a, key)
                vb = _collect(included, b, key)
                if len(va) != len(vb) or len(va) < 2:
                    continue
                cmp = ev.paired_ci(va, vb, (a, b))
                pairwise.append({
                    "methods": [a, b],
                    "metric": key,
                    "mean_diff": cmp.mean_diff,
                    "se_diff": cmp.se_diff,
                    "ci95": list(cmp.ci95),
                    "significant": cmp.significant,
                    "n_iterations": cmp.n_iterations,
                })

    stability = {}
    if not cfg.simulate and len(included) >= 2:
        for m in lasso_present:
            sel = []
            for it in included:
                rec = it["methods"].get(m)
                if rec is None:
                    continue
                sel.append(set(rec["selected_features"]))
            if len(sel) >= 2:
                stability[m] = sel
    return {"summary": summary, "winners": winners, "pairwise": pairwise,
            "stability_selections": stability, "included": len(included)}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    data = cfg.dataset.load()
    feature_names = data.feature_names
    tasks = [(cfg, data, i) for i in range(cfg.n_iterations)]
    outputs = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outputs = list(pool.map(_iteration_worker, tasks))
    else:
        outputs = [_iteration_worker(t) for t in tasks]
    outputs.sort(key=lambda t: t[0])

    iterations, excluded, timings = [], [], {}
    for i, result, t, err in outputs:
        if err is not None:
            excluded.append({"iteration": i, "reason": err})
            continue
        iterations.append(result)
        timings[str(i)] = t
        for m in LASSO_METHODS:
            rec = result["methods"].get(m)
            if rec is not None and rec["n_terms"] == 0:
                excluded.append({"iteration": i,
                                 "reason": f"{m} produced an intercept-only model"})
                break

    agg = _aggregate(cfg, iterations, excluded)
    feat_index = {f: j for j, f in enumerate(feature_names)}
    stability = {}
    for m, sels in agg.pop("stability_selections").items():
        sets = [{feat_index[f] for f in s} for s in sels]
        stability[m] = ev.nogueira_stability(sets, len(feature_names))

    report = {
        "config": cfg.describe(),
        "n_iterations": cfg.n_iterations,
        "included_iterations": agg["included"],
        "iterations": iterations,
        "excluded": excluded,
        "summary": agg["summary"],
        "winners": agg["winners"],
        "pairwise": agg["pairwise"],
        "stability": stability,
    }
    timing_totals = {}
    for t in timings.values():
        for m, s in t.items():
            timing_totals[m] = timing_totals.get(m, 0.0) + s
    out = ExperimentReport(report, {"per_iteration": timings,
                                    "totals": timing_totals})
    if cfg.output_dir:
        out.save(cfg.output_dir)
    return out


def summarize(report: dict, timings: dict | None = None) -> str:
    """Human-readable tables: per-method mean (sd), winners, pairwise CIs."""
    lines = []
    summary = report["summary"]
    winners = report.get("winners", {})
    lines.append(f"iterations: {report['n_iterations']} "
                 f"(included: {report['included_iterations']}, "
                 f"excluded: {len(report['excluded'])})")
    header = f"{'method':<12}{'accuracy':>22}{'terms':>20}{'quality/term':>22}"
    lines.append(header)
    lines.append("-" * len(header))
    for m in ALL_METHODS:
        if m not in summary:
            continue
        cells = [f"{m:<12}"]
        for key in ("accuracy", "n_terms", "quality_per_term"):
            stat = summary[m].get(key)
            if stat is None:
                cell = "NA"
            else:
                sd = stat["sd"]
                cell = f"{stat['mean']:.4g} ({sd:.4g})"
                if stat["n"] == 1:
                    cell = f"{stat['mean']:.4g} (n=1)"
                if winners.get(key) == m:
                    cell += " *"
            cells.append(f"{cell:>20}" if key != "accuracy" else f"{cell:>22}")
        lines.append("".join(cells))
    lines.append("(* best among the lasso methods)")

    if report["pairwise"]:
        lines.append("")
        lines.append("pairwise 95% CIs (mean difference, first minus second):")
        for pc in report["pairwise"]:
            a, b = pc["methods"]
            lo, hi = pc["ci95"]
            star = " *" if pc["significant"] else ""
            lines.append(f"  {a}-{b} [{pc['metric']}]: "
                         f"{pc['mean_diff']:.4g} [{lo:.4g}, {hi:.4g}]{star}")
    if report["stability"]:
        lines.append("")
        lines.append("feature-selection stability:")
        for m, v in sorted(report["stability"].items()):
            lines.append(f"  {m}: {v:.3f}")
    if timings and timings.get("totals"):
        lines.append("")
        lines.append("total wall-clock seconds per method:")
        for m, s in sorted(timings["totals"].items()):
            lines.append(f"  {m}: {s:.2f}")
    if report["excluded"]:
        lines.append("")
        lines.append("excluded iterations:")
        for e in report["excluded"]:
            lines.append(f"  {e['iteration']}: {e['reason']}")
    return "\n".join(lines)
