"""JSON-over-HTTP prediction and explanation service over a StudyBundle.

Endpoints: GET /health, GET /schema, POST /predict, POST /whatif,
POST /explain. The bundle is loaded once and shared read-only; every handler
is a pure function of (bundle, payload), so the HTTP layer is a thin stdlib
wrapper and the handlers are directly testable without sockets.

Request bodies are JSON envelopes: predict/explain take
{"features": {name: value, ...}, "request_id"?: str, "n_samples"?: int} and
whatif takes {"base": {...}, "overrides": {...}, "request_id"?: str}.
Missing features are legal and flow through each member pipeline's own fitted
imputer. All error bodies carry a machine-readable {"code", "field"?} shape.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .bundle import StudyBundle, build_manifest, load_study
from .explain import sampled_shapley
from .search import predict_ensemble, predict_ensemble_event_prob
from .tabular import Dataset

MAX_EXPLAIN_SAMPLES = 10_000
DEFAULT_EXPLAIN_SAMPLES = 1_000


class RequestError(Exception):
    def __init__(self, status: int, code: str, field: str | None = None,
                 detail: str | None = None):
        self.status = status
        self.body = {"code": code}
        if field is not None:
            self.body["field"] = field
        if detail is not None:
            self.body["detail"] = detail
        super().__init__(code)


def _feature_spec(bundle: StudyBundle) -> dict[str, dict]:
    return {f["name"]: f for f in bundle.feature_summary}


def _build_row(bundle: StudyBundle, features: dict) -> tuple[Dataset, list[str]]:
    """One-row feature Dataset from a name->value map; absent names stay
    masked for the imputers. Returns the dataset and extrapolation warnings."""
    if not isinstance(features, dict):
        raise RequestError(400, "TypeError", detail="features must be an object")
    spec = _feature_spec(bundle)
    for name in features:
        if name not in spec:
            raise RequestError(400, "UnknownFeature", field=name)
    feature_schema = [c for c in bundle.schema if c.role == "feature"]
    values = np.full((1, len(feature_schema)), np.nan)
    mask = np.ones((1, len(feature_schema)), dtype=bool)
    warnings: list[str] = []
    for j, col in enumerate(feature_schema):
        if col.name not in features:
            continue
        raw = features[col.name]
        meta = spec[col.name]
        if col.kind == "categorical":
            if not isinstance(raw, str):
                raise RequestError(400, "TypeError", field=col.name,
                                   detail="categorical values are level names")
            levels = list(col.categories or ())
            if raw not in levels:
                raise RequestError(422, "UnknownLevel", field=col.name,
                                   detail=f"allowed: {levels}")
            values[0, j] = float(levels.index(raw))
        else:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise RequestError(400, "TypeError", field=col.name,
                                   detail="numeric value required")
            v = float(raw)
            if col.kind == "binary" and v not in (0.0, 1.0):
                raise RequestError(400, "TypeError", field=col.name,
                                   detail="binary values are 0 or 1")
            if col.kind == "numeric":
                lo, hi = meta["range"]
                if v < lo or v > hi:
                    warnings.append(f"extrapolation: {col.name}")
            values[0, j] = v
        mask[0, j] = False
    return Dataset(schema=feature_schema, values=values, missing_mask=mask), warnings


def _risk(bundle: StudyBundle, row: Dataset) -> dict:
    task = bundle.model.task
    out: dict = {}
    if task.task == "survival":
        prob = float(predict_ensemble_event_prob(bundle.model, row)[0])
        out["risk"] = prob
        out["event_prob_at_horizon"] = prob
        out["horizon"] = task.horizon
        out["relative_risk"] = float(predict_ensemble(bundle.model, row)[0])
    else:
        out["risk"] = float(predict_ensemble(bundle.model, row)[0])
    return out


# -- handlers ------------------------------------------------------------------------

def handle_health(bundle: StudyBundle | None) -> tuple[int, dict]:
    return 200, {"status": "ok"}


def handle_schema(bundle: StudyBundle | None) -> tuple[int, dict]:
    if bundle is None:
        return 503, {"code": "BundleUnavailable"}
    doc = build_manifest(bundle)
    doc["model"] = {"task": bundle.model.task.task,
                    "metric": bundle.model.task.primary_metric,
                    "study_seed": bundle.study_seed}
    return 200, doc


def handle_predict(bundle: StudyBundle | None, payload: dict) -> tuple[int, dict]:
    if bundle is None:
        return 503, {"code": "BundleUnavailable"}
    try:
        features = _features_of(payload)
        row, warnings = _build_row(bundle, features)
        out = _risk(bundle, row)
    except RequestError as err:
        return err.status, err.body
    if warnings:
        out["warnings"] = warnings
    _echo_request_id(payload, out)
    return 200, out


def handle_whatif(bundle: StudyBundle | None, payload: dict) -> tuple[int, dict]:
    """Two predictions composed: overrides applied on top of the base map."""
    if bundle is None:
        return 503, {"code": "BundleUnavailable"}
    base = payload.get("base")
    overrides = payload.get("overrides", {})
    if not isinstance(base, dict) or not isinstance(overrides, dict):
        return 400, {"code": "TypeError", "detail": "base/overrides must be objects"}
    try:
        row_base, warn_base = _build_row(bundle, base)
        row_new, warn_new = _build_row(bundle, {**base, **overrides})
        base_risk = _risk(bundle, row_base)["risk"]
        new_risk = _risk(bundle, row_new)["risk"]
    except RequestError as err:
        return err.status, err.body
    out = {"base_risk": base_risk, "new_risk": new_risk,
           "delta": new_risk - base_risk}
    warnings = warn_base + [w for w in warn_new if w not in warn_base]
    if warnings:
        out["warnings"] = warnings
    _echo_request_id(payload, out)
    return 200, out


def handle_explain(bundle: StudyBundle | None, payload: dict) -> tuple[int, dict]:
    """Sampled Shapley against the bundled background with the study seed, so
    identical requests return identical attributions."""
    if bundle is None:
        return 503, {"code": "BundleUnavailable"}
    n_samples = payload.get("n_samples", DEFAULT_EXPLAIN_SAMPLES)
    if (isinstance(n_samples, bool) or not isinstance(n_samples, int)
            or not 1 <= n_samples <= MAX_EXPLAIN_SAMPLES):
        return 400, {"code": "BadSampleCount", "field": "n_samples"}
    try:
        features = _features_of(payload)
        row, warnings = _build_row(bundle, features)
    except RequestError as err:
        return err.status, err.body
    # missing cells stay masked; each member's imputer handles them in-flight
    exp = sampled_shapley(bundle.model, row, bundle.background,
                          n_samples=n_samples, seed=bundle.study_seed)
    out = {
        "attributions": [{"feature": n, "value": float(v)}
                         for n, v in zip(exp.feature_names, exp.values)],
        "prediction": exp.metadata["prediction"],
        "background_mean": exp.metadata["background_mean"],
        "total_se": exp.metadata["total_se"],
        "n_samples": n_samples,
    }
    if warnings:
        out["warnings"] = warnings
    _echo_request_id(payload, out)
    return 200, out


def _features_of(payload: dict) -> dict:
    if not isinstance(payload, dict) or "features" not in payload:
        raise RequestError(400, "TypeError", field="features",
                           detail='body must be {"features": {...}}')
    return payload["features"]


def _echo_request_id(payload: dict, out: dict) -> None:
    rid = payload.get("request_id")
    if isinstance(rid, str):
        out["request_id"] = rid


# -- HTTP wrapper -----------------------------------------------------------------------

def make_server(bundle_dir: str, host: str = "127.0.0.1",
                port: int = 8000) -> ThreadingHTTPServer:
    try:
        bundle: StudyBundle | None = load_study(bundle_dir)
    except Exception:
        bundle = None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep stdout quiet
            pass

        def _send(self, status: int, body: dict) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/health":
                self._send(*handle_health(bundle))
            elif self.path == "/schema":
                self._send(*handle_schema(bundle))
            else:
                self._send(404, {"code": "NotFound"})

        def do_POST(self):
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError):
                self._send(400, {"code": "BadJson"})
                return
            routes = {"/predict": handle_predict, "/whatif": handle_whatif,
                      "/explain": handle_explain}
            handler = routes.get(self.path)
            if handler is None:
                self._send(404, {"code": "NotFound"})
                return
            self._send(*handler(bundle, payload))

    return ThreadingHTTPServer((host, port), Handler)


def serve(bundle_dir: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    server = make_server(bundle_dir, host, port)
    print(f"serving {bundle_dir} on http://{host}:{port}")
    try:
        server.serve_forever()
    finally:
        server.server_close()
