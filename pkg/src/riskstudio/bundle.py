"""Study persistence: canonical JSON bundles, loading, and demo export.

A StudyBundle directory holds study.json (the search ledger), model.json (a
fully self-contained ensemble), schema.json, background.csv (a seeded sample
for Shapley explanations), and report.md (the human leaderboard). JSON is
canonical: sorted keys, no whitespace, floats via repr (shortest round-trip),
so identical studies write byte-identical bundles. study.json carries sha256
hashes of its sibling files; load_study refuses corrupt or version-mismatched
bundles.

Trial wall times are reported in report.md only: they are the one
non-deterministic observable and would break byte-for-byte reproducibility if
serialized into study.json.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import CorruptBundle, IoError, MissingFile, VersionMismatch
from .impute import imputer_from_dict, imputer_to_dict
from .learners import learner_from_dict, learner_to_dict
from .preprocess import FittedStage, StageConfig
from .search import (
    EnsembleModel,
    FittedPipeline,
    StudyReport,
    TrialRecord,
    config_from_dict,
    config_to_dict,
    space_from_dict,
    space_to_dict,
)
from .tabular import (
    ColumnSchema,
    Dataset,
    TaskSpec,
    load_csv,
    schema_from_json,
    schema_to_json,
    write_csv,
)

FORMAT_VERSION = "1"
BACKGROUND_ROWS = 256

STUDY_FILE = "study.json"
MODEL_FILE = "model.json"
SCHEMA_FILE = "schema.json"
BACKGROUND_FILE = "background.csv"
REPORT_FILE = "report.md"


def to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False) + "\n"


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# -- task / report / model serialization -------------------------------------------

def task_to_dict(t: TaskSpec) -> dict:
    return {"task": t.task, "horizon": t.horizon, "primary_metric": t.primary_metric}


def task_from_dict(d: dict) -> TaskSpec:
    return TaskSpec(task=d["task"], horizon=d["horizon"],
                    primary_metric=d["primary_metric"])


def report_to_dict(report: StudyReport) -> dict:
    leaderboard = sorted(
        range(len(report.trials)),
        key=lambda i: (-report.trials[i].mean_score, report.trials[i].trial_index))
    return {
        "format_version": FORMAT_VERSION,
        "engine_version": report.engine_version,
        "task": task_to_dict(report.task),
        "space": space_to_dict(report.space),
        "seed": report.seed,
        "folds": report.k,
        "imputations": report.r,
        "budget": report.budget,
        "n_init": report.n_init,
        "n_cand": report.n_cand,
        "surrogate_trees": report.surrogate_trees,
        "fingerprint": report.fingerprint,
        "best_trial": report.best_index,
        "leaderboard": leaderboard,
        "ensemble": report.ensemble_summary,
        "trials": [
            {
                "trial_index": tr.trial_index,
                "config": config_to_dict(tr.config),
                "fold_scores": tr.fold_scores.tolist(),
                "mean_score": tr.mean_score,
                "sd_score": tr.sd_score,
                "seed": tr.seed,
                "error": tr.error,
            }
            for tr in report.trials
        ],
    }


def report_from_dict(d: dict) -> StudyReport:
    trials = [
        TrialRecord(
            config=config_from_dict(tr["config"]),
            fold_scores=np.asarray(tr["fold_scores"], dtype=np.float64),
            mean_score=tr["mean_score"], sd_score=tr["sd_score"],
            wall_time=0.0, seed=tr["seed"], trial_index=tr["trial_index"],
            error=tr["error"],
        )
        for tr in d["trials"]
    ]
    return StudyReport(
        task=task_from_dict(d["task"]), space=space_from_dict(d["space"]),
        trials=trials, best_index=d["best_trial"], seed=d["seed"],
        k=d["folds"], r=d["imputations"], budget=d["budget"],
        n_init=d["n_init"], n_cand=d["n_cand"],
        surrogate_trees=d["surrogate_trees"],
        engine_version=d["engine_version"], fingerprint=d["fingerprint"],
        ensemble_summary=d["ensemble"],
    )


def stage_to_dict(s: FittedStage) -> dict:
    def enc(state: dict) -> dict:
        out = {}
        for k, v in state.items():
            if k == "grids":
                out[k] = [[u.tolist(), p.tolist()] for u, p in v]
            elif isinstance(v, np.ndarray):
                out[k] = v.tolist()
            else:
                out[k] = v
        return out

    return {
        "config": {"scaler": s.config.scaler, "dimred": s.config.dimred,
                   "dimred_param": s.config.dimred_param},
        "n_in": s.n_in, "n_out": s.n_out,
        "scaler_state": enc(s.scaler_state),
        "dimred_state": enc(s.dimred_state),
    }


def stage_from_dict(d: dict) -> FittedStage:
    def dec(state: dict) -> dict:
        out = {}
        for k, v in state.items():
            if k == "grids":
                out[k] = [(np.asarray(u, dtype=np.float64),
                           np.asarray(p, dtype=np.float64)) for u, p in v]
            elif isinstance(v, list):
                out[k] = np.asarray(v, dtype=np.float64)
            else:
                out[k] = v
        return out

    cfg = StageConfig(**d["config"])
    state = dec(d["dimred_state"])
    if "keep" in state:
        state["keep"] = state["keep"].astype(np.int64)
    return FittedStage(config=cfg, n_in=d["n_in"], n_out=d["n_out"],
                       scaler_state=dec(d["scaler_state"]), dimred_state=state)


def feature_summary(d: Dataset) -> list[dict]:
    """Per-feature display metadata for demonstrators: observed range or
    levels plus a median/mode default. No raw data leaves the bundle."""
    rows = []
    for j, c in enumerate(d.schema):
        if c.role != "feature":
            continue
        obs = d.values[~d.missing_mask[:, j], j]
        if c.kind == "categorical":
            levels = list(c.categories or ())
            if len(obs):
                counts = np.bincount(obs.astype(int), minlength=len(levels))
                default = levels[int(np.argmax(counts))]
            else:
                default = levels[0] if levels else ""
            rows.append({"name": c.name, "kind": c.kind,
                         "levels": levels, "default": default})
        elif c.kind == "binary":
            default = int(round(float(obs.mean()))) if len(obs) else 0
            rows.append({"name": c.name, "kind": c.kind,
                         "levels": [0, 1], "default": default})
        else:
            lo = float(obs.min()) if len(obs) else 0.0
            hi = float(obs.max()) if len(obs) else 1.0
            med = float(np.median(obs)) if len(obs) else 0.0
            rows.append({"name": c.name, "kind": c.kind,
                         "range": [lo, hi], "default": med})
    return rows


def model_to_dict(model: EnsembleModel, feature_schema: list[ColumnSchema],
                  features: list[dict], study_seed: int) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "task": task_to_dict(model.task),
        "study_seed": study_seed,
        "feature_schema": json.loads(schema_to_json(feature_schema)),
        "feature_summary": features,
        "weights": model.weights.tolist(),
        "members": [
            {
                "config": config_to_dict(mem.config),
                "imputer": imputer_to_dict(mem.imputer),
                "stage": stage_to_dict(mem.stage),
                "learner": learner_to_dict(mem.learner),
            }
            for mem in model.members
        ],
    }


def model_from_dict(d: dict) -> tuple[EnsembleModel, list[dict], int]:
    feature_schema = schema_from_json(json.dumps(d["feature_schema"]))
    members = []
    for mem in d["members"]:
        members.append(FittedPipeline(
            config=config_from_dict(mem["config"]),
            imputer=imputer_from_dict(mem["imputer"], feature_schema),
            stage=stage_from_dict(mem["stage"]),
            learner=learner_from_dict(mem["learner"]),
        ))
    model = EnsembleModel(members=members,
                          weights=np.asarray(d["weights"], dtype=np.float64),
                          task=task_from_dict(d["task"]))
    return model, d["feature_summary"], d["study_seed"]


# -- bundle ------------------------------------------------------------------------


@dataclass
class StudyBundle:
    directory: str
    report: StudyReport
    model: EnsembleModel
    schema: list[ColumnSchema]
    feature_summary: list[dict]
    background: Dataset
    study_seed: int


def _background_sample(d: Dataset, seed: int) -> Dataset:
    features = d.feature_view()
    if features.n_rows <= BACKGROUND_ROWS:
        return features
    rng = np.random.default_rng([seed, 0xB6])
    rows = np.sort(rng.choice(features.n_rows, size=BACKGROUND_ROWS, replace=False))
    return features.select_rows(rows)


def save_study(report: StudyReport, model: EnsembleModel, d: Dataset,
               directory: str) -> StudyBundle:
    """Write the five bundle files; canonical serialization makes two saves of
    the same study byte-identical."""
    try:
        os.makedirs(directory, exist_ok=True)
        features = d.feature_view()
        summary = feature_summary(d)
        model_text = canonical_json(
            model_to_dict(model, features.schema, summary, report.seed))
        schema_text = schema_to_json(d.schema) + "\n"
        background = _background_sample(d, report.seed)
        from .tabular import write_csv_text

        background_text = write_csv_text(background)
        study = report_to_dict(report)
        study["bundle_hashes"] = {
            MODEL_FILE: _sha256_text(model_text),
            SCHEMA_FILE: _sha256_text(schema_text),
            BACKGROUND_FILE: _sha256_text(background_text),
        }
        study_text = canonical_json(study)
        for name, text in ((STUDY_FILE, study_text), (MODEL_FILE, model_text),
                           (SCHEMA_FILE, schema_text),
                           (BACKGROUND_FILE, background_text)):
            with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
                fh.write(text)
        with open(os.path.join(directory, REPORT_FILE), "w", encoding="utf-8") as fh:
            fh.write(render_report_md(report))
    except OSError as exc:
        raise IoError(f"cannot write bundle to {directory}: {exc}") from exc
    return StudyBundle(directory=directory, report=report, model=model,
                       schema=list(d.schema), feature_summary=summary,
                       background=background, study_seed=report.seed)


def render_report_md(report: StudyReport) -> str:
    t = report.task
    horizon = f", horizon: {t.horizon}" if t.horizon else ""
    lines = [
        "# Study report",
        "",
        f"- task: {t.task} (metric: {t.primary_metric}{horizon})",
        f"- budget: {report.budget} trials, {report.k}-fold CV, "
        f"{report.r} imputation(s), seed {report.seed}",
        f"- data: {report.fingerprint['n_rows']} rows x "
        f"{report.fingerprint['n_cols']} columns, "
        f"sha256 {report.fingerprint['sha256'][:12]}…",
        f"- engine: {report.engine_version}",
        "",
    ]
    if report.ensemble_summary:
        es = report.ensemble_summary
        lines += [
            f"Ensemble: top {es['size']} pipelines, weights = softmax(mean score / "
            f"{es['temperature']}) -> {', '.join(f'{w:.3f}' for w in es['weights'])}",
            "",
        ]
    lines += [
        "| rank | trial | learner | imputer | scaler | dimred | mean | sd | time (s) |",
        "|---:|---:|---|---|---|---|---:|---:|---:|",
    ]
    order = sorted(report.trials, key=lambda tr: (-tr.mean_score, tr.trial_index))
    for rank, tr in enumerate(order, start=1):
        c = tr.config
        note = " (failed)" if tr.failed else ""
        lines.append(
            f"| {rank} | {tr.trial_index} | {c.learner.family}{note} | "
            f"{c.imputer.method} | {c.stage.scaler} | {c.stage.dimred} | "
            f"{tr.mean_score:.4f} | {tr.sd_score:.4f} | {tr.wall_time:.2f} |")
    lines.append("")
    return "\n".join(lines)


def _read(directory: str, name: str) -> str:
    path = os.path.join(directory, name)
    if not os.path.exists(path):
        raise MissingFile(f"bundle file {name!r} missing from {directory}")
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def load_study(directory: str) -> StudyBundle:
    """Load and verify a bundle; the model predicts without the training data."""
    study_text = _read(directory, STUDY_FILE)
    study = json.loads(study_text)
    if study.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"bundle format {study.get('format_version')!r}, engine expects "
            f"{FORMAT_VERSION!r}")
    texts = {name: _read(directory, name)
             for name in (MODEL_FILE, SCHEMA_FILE, BACKGROUND_FILE)}
    for name, text in texts.items():
        expected = study["bundle_hashes"].get(name)
        if _sha256_text(text) != expected:
            raise CorruptBundle(f"{name} does not match its recorded hash")
    model_doc = json.loads(texts[MODEL_FILE])
    if model_doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch("model.json format version mismatch")
    model, summary, study_seed = model_from_dict(model_doc)
    schema = schema_from_json(texts[SCHEMA_FILE])
    feature_schema = [c for c in schema if c.role == "feature"]
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False,
                                     encoding="utf-8") as fh:
        fh.write(texts[BACKGROUND_FILE])
        tmp = fh.name
    try:
        background = load_csv(tmp, feature_schema)
    finally:
        os.unlink(tmp)
    report = report_from_dict(study)
    return StudyBundle(directory=directory, report=report, model=model,
                       schema=schema, feature_summary=summary,
                       background=background, study_seed=study_seed)


# -- demonstrator export --------------------------------------------------------------

def build_manifest(bundle: StudyBundle) -> dict:
    t = bundle.model.task
    return {
        "format_version": FORMAT_VERSION,
        "task": t.task,
        "metric": t.primary_metric,
        "horizon": t.horizon,
        "study_seed": bundle.study_seed,
        "features": bundle.feature_summary,
    }


def export_demo(directory: str, out: str) -> str:
    """Copy the bundle and add ui_manifest.json; returns the output directory."""
    bundle = load_study(directory)
    try:
        os.makedirs(out, exist_ok=True)
        for name in (STUDY_FILE, MODEL_FILE, SCHEMA_FILE, BACKGROUND_FILE, REPORT_FILE):
            src = os.path.join(directory, name)
            if not os.path.exists(src):
                raise MissingFile(f"bundle file {name!r} missing from {directory}")
            with open(src, "r", encoding="utf-8") as fh:
                text = fh.read()
            with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
                fh.write(text)
        with open(os.path.join(out, "ui_manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(canonical_json(build_manifest(bundle)))
    except OSError as exc:
        raise IoError(f"cannot write demo bundle to {out}: {exc}") from exc
    return out
