"""Train, bundle, serve over HTTP, and probe the model like the web UI does.

Saves a study bundle to a temp directory, starts the JSON service on an
ephemeral port, and exercises /schema, /predict, /whatif, and /explain.
"""

import json
import tempfile
import threading
import urllib.request

import numpy as np

from riskstudio.bundle import save_study
from riskstudio.search import build_ensemble, default_space, run_study
from riskstudio.serve import make_server
from riskstudio.tabular import ColumnSchema, Dataset, TaskSpec

rng = np.random.default_rng(5)
n = 300
age = rng.normal(55, 10, n)
bmi = rng.normal(27, 4, n)
smoker = (rng.random(n) < 0.3).astype(float)
y = (0.06 * (age - 55) + 0.1 * (bmi - 27) + 1.2 * smoker
     + rng.normal(size=n) > 0.4).astype(float)
schema = [ColumnSchema("age", "numeric"), ColumnSchema("bmi", "numeric"),
          ColumnSchema("smoker", "binary"),
          ColumnSchema("y", "binary", role="target")]
d = Dataset(schema=schema, values=np.stack([age, bmi, smoker, y], axis=1),
            missing_mask=np.zeros((n, 4), dtype=bool))

task = TaskSpec("classification")
report = run_study(d, task, default_space(task, d.schema), budget=8, k=3,
                   r=1, seed=2, n_init=5, n_cand=100, surrogate_trees=25)
model = build_ensemble(report, d, m=2)

with tempfile.TemporaryDirectory() as tmp:
    save_study(report, model, d, tmp)
    server = make_server(tmp, host="127.0.0.1", port=0)
    port = server.server_address[1]
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{port}"

    def post(path, payload):
        req = urllib.request.Request(
            f"{base}{path}", data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(req) as resp:
            return json.load(resp)

    manifest = json.load(urllib.request.urlopen(f"{base}/schema"))
    defaults = {f["name"]: f["default"] for f in manifest["features"]}
    print("manifest defaults:", defaults)

    risk = post("/predict", {"features": defaults})["risk"]
    print(f"\nbaseline risk: {risk:.3f}")

    whatif = post("/whatif", {"base": defaults,
                              "overrides": {"smoker": 1, "bmi": 33.0}})
    print(f"what-if smoker+high bmi: {whatif['new_risk']:.3f} "
          f"(delta {whatif['delta']:+.3f})")

    explained = post("/explain", {"features": {**defaults, "smoker": 1},
                                  "n_samples": 400})
    print("\ntop attributions for a smoker:")
    for row in sorted(explained["attributions"],
                      key=lambda r: -abs(r["value"])):
        print(f"  {row['feature']:<8} {row['value']:+.3f}")

    missing = post("/predict", {"features": {"age": 70.0, "smoker": 1}})
    print(f"\nomitting bmi entirely still predicts (imputed internally): "
          f"{missing['risk']:.3f}")
    server.shutdown()
    server.server_close()
