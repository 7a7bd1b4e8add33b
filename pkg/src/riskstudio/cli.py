"""Command-line interface: one verb per engine capability.

train / evaluate / explain / voi / subgroup / dca / serve / export-demo.
`voi` and `dca` print plot-ready CSV to stdout.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .bundle import export_demo, load_study, save_study
from .errors import RiskStudioError
from .explain import (
    VOI_BUDGET,
    VOI_THRESHOLDS,
    effect_size_ranking,
    outcome_vector,
    permutation_importance,
    sampled_shapley,
    subgroup_report,
    value_of_information,
)
from .metrics import (
    auroc,
    brier,
    concordance_index,
    default_dca_thresholds,
    net_benefit_curve,
    r_squared,
    survival_brier,
)
from .search import (
    N_CAND,
    N_INIT,
    SURROGATE_TREES,
    build_ensemble,
    default_space,
    predict_ensemble,
    predict_ensemble_event_prob,
    run_study,
)
from .serve import serve as run_server
from .tabular import Dataset, TaskSpec, load_csv, load_schema


def _apply_roles(schema, target=None, time_col=None, event_col=None):
    by_name = {c.name: c for c in schema}
    for name, role in ((target, "target"), (time_col, "time"), (event_col, "event")):
        if name is None:
            continue
        if name not in by_name:
            raise RiskStudioError(f"no column named {name!r} in schema")
        by_name[name] = replace(by_name[name], role=role)
    out = []
    for c in schema:
        c = by_name[c.name]
        # a previous role assignment from the schema file gives way to the CLI
        if c.role in ("target", "time", "event") and c.name not in (target, time_col, event_col) \
                and any(x is not None for x in (target, time_col, event_col)):
            c = replace(c, role="feature")
        out.append(c)
    return out


def _load_task_dataset(args) -> tuple[Dataset, TaskSpec]:
    schema = load_schema(args.schema)
    schema = _apply_roles(schema, args.target, args.time_col, args.event_col)
    d = load_csv(args.data, schema)
    horizon = getattr(args, "horizon", None)
    t = TaskSpec(task=args.task, horizon=horizon)
    if args.task == "survival":
        d.single_role_column("time")
        d.single_role_column("event")
    else:
        d.single_role_column("target")
    return d, t


def _labels(d: Dataset, task: TaskSpec):
    if task.task == "survival":
        return d.survival_vectors()
    return d.target_vector()


def cmd_train(args) -> int:
    d, t = _load_task_dataset(args)
    space = default_space(t, d.schema)
    report = run_study(d, t, space, budget=args.budget, k=args.folds,
                       r=args.imputations, seed=args.seed,
                       n_init=args.n_init, n_cand=args.n_cand,
                       surrogate_trees=args.surrogate_trees)
    distinct = len({tr.config.key() for tr in report.trials if not tr.failed})
    m = min(args.ensemble_size, distinct)
    if m < args.ensemble_size:
        print(f"note: only {distinct} distinct successful pipelines; "
              f"ensemble size clamped to {m}", file=sys.stderr)
    model = build_ensemble(report, d, m, temperature=args.temperature)
    save_study(report, model, d, args.out)
    best = report.best_trial()
    print(f"best trial {best.trial_index}: {best.config.learner.family} "
          f"{t.primary_metric}={best.mean_score:.4f} (sd {best.sd_score:.4f})")
    print(f"bundle written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    bundle = load_study(args.study)
    d = load_csv(args.data, bundle.schema)
    t = bundle.model.task
    labels = _labels(d, t)
    scores = predict_ensemble(bundle.model, d)
    if t.task == "classification":
        results = [auroc(scores, labels), brier(np.clip(scores, 0, 1), labels)]
    elif t.task == "regression":
        results = [r_squared(scores, labels)]
    else:
        times, events = labels
        probs = predict_ensemble_event_prob(bundle.model, d)
        results = [concordance_index(scores, times, events),
                   survival_brier(probs, times, events, t.horizon)]
    for res in results:
        print(f"{res.name}: {res.value:.6f} (n_effective={res.n_effective})")
    return 0


def cmd_explain(args) -> int:
    bundle = load_study(args.study)
    d = load_csv(args.data, bundle.schema)
    t = bundle.model.task
    if args.method == "effect-size":
        exp = effect_size_ranking(d, outcome_vector(d, t))
    elif args.method == "permutation":
        exp = permutation_importance(bundle.model, d, _labels(d, t),
                                     t.primary_metric, repeats=args.repeats,
                                     seed=bundle.study_seed)
    else:
        row = d.feature_view().select_rows(np.asarray([args.row]))
        exp = sampled_shapley(bundle.model, row, bundle.background,
                              n_samples=args.n_samples, seed=bundle.study_seed)
    print("feature,value")
    for name, value in exp.ranked():
        print(f"{name},{value!r}")
    return 0


def cmd_voi(args) -> int:
    d, t = _load_task_dataset(args)
    thresholds = tuple(float(v) for v in args.thresholds.split(","))
    thresholds = tuple(sorted(thresholds, reverse=True))
    curve = value_of_information(d, t, thresholds, budget=args.budget,
                                 seed=args.seed, k=args.folds,
                                 r=args.imputations)
    print("threshold,n_features,score,features")
    for thr, n, score, names in zip(curve.thresholds, curve.n_features,
                                    curve.scores, curve.feature_names):
        print(f"{thr},{n},{score!r},{';'.join(names)}")
    return 0


def cmd_subgroup(args) -> int:
    bundle = load_study(args.study)
    d = load_csv(args.data, bundle.schema)
    t = bundle.model.task
    out = subgroup_report(bundle.model, d, _labels(d, t), args.feature,
                          args.split_at)
    for group, info in out.items():
        if group == "excluded_missing":
            print(f"excluded (missing split feature): {info}")
            continue
        metrics = " ".join(f"{name}={m.value:.6f}(n_eff={m.n_effective})"
                           for name, m in info["metrics"].items())
        print(f"{group}: n={info['n']} {metrics}")
    return 0


def cmd_dca(args) -> int:
    bundle = load_study(args.study)
    d = load_csv(args.data, bundle.schema)
    t = bundle.model.task
    thresholds = default_dca_thresholds(args.tmin, args.tmax, args.tstep)
    if t.task == "classification":
        probs = np.clip(predict_ensemble(bundle.model, d), 0.0, 1.0)
        labels = d.target_vector()
    elif t.task == "survival":
        times, events = d.survival_vectors()
        usable = ((times <= t.horizon) & (events == 1)) | (times >= t.horizon)
        probs = predict_ensemble_event_prob(bundle.model, d)[usable]
        labels = ((times <= t.horizon) & (events == 1))[usable].astype(float)
    else:
        raise RiskStudioError("decision curves need classification or survival")
    curve = net_benefit_curve(probs, labels, thresholds)
    print("threshold,model_nb,treat_all_nb,treat_none_nb")
    for row in zip(curve.thresholds, curve.model_nb, curve.treat_all_nb,
                   curve.treat_none_nb):
        print(",".join(repr(float(v)) for v in row))
    return 0


def cmd_serve(args) -> int:
    run_server(args.study, host=args.host, port=args.port)
    return 0


def cmd_export_demo(args) -> int:
    out = export_demo(args.study, args.out)
    print(f"demonstrator bundle written to {out}")
    return 0


def _add_task_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--task", required=True,
                   choices=["classification", "regression", "survival"])
    p.add_argument("--target")
    p.add_argument("--time-col")
    p.add_argument("--event-col")
    p.add_argument("--horizon", type=float)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--imputations", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskstudio",
        description="Automated pipeline search for tabular risk models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a study and save the bundle")
    _add_task_args(p)
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--out", required=True)
    p.add_argument("--n-init", type=int, default=N_INIT)
    p.add_argument("--n-cand", type=int, default=N_CAND)
    p.add_argument("--surrogate-trees", type=int, default=SURROGATE_TREES)
    p.add_argument("--ensemble-size", type=int, default=5)
    p.add_argument("--temperature", type=float, default=0.1)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a dataset")
    p.add_argument("--study", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("explain", help="feature attributions and rankings")
    p.add_argument("--study", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True,
                   choices=["shapley", "permutation", "effect-size"])
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("voi", help="value-of-information curve (CSV to stdout)")
    _add_task_args(p)
    p.add_argument("--thresholds",
                   default=",".join(str(v) for v in VOI_THRESHOLDS))
    p.add_argument("--budget", type=int, default=VOI_BUDGET)
    p.set_defaults(fn=cmd_voi)

    p = sub.add_parser("subgroup", help="metrics for a two-way cohort split")
    p.add_argument("--study", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--split-at", type=float, required=True)
    p.set_defaults(fn=cmd_subgroup)

    p = sub.add_parser("dca", help="decision-curve net benefit (CSV to stdout)")
    p.add_argument("--study", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tmin", type=float, default=0.01)
    p.add_argument("--tmax", type=float, default=0.5)
    p.add_argument("--tstep", type=float, default=0.01)
    p.set_defaults(fn=cmd_dca)

    p = sub.add_parser("serve", help="HTTP prediction service over a bundle")
    p.add_argument("--study", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("export-demo", help="bundle + ui manifest for the web UI")
    p.add_argument("--study", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (RiskStudioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
