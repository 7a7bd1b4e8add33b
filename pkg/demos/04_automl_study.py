"""A full pipeline-search study on XOR data, where model choice matters.

XOR labels are linearly inseparable, so the Bayesian-optimization loop has to
discover tree-based pipelines; the demo then ensembles the leaders, prints
the leaderboard, and explains the winner.
"""

import numpy as np

from riskstudio.explain import effect_size_ranking, permutation_importance
from riskstudio.metrics import auroc
from riskstudio.search import (
    build_ensemble,
    default_space,
    predict_ensemble,
    run_study,
)
from riskstudio.tabular import ColumnSchema, Dataset, TaskSpec, split_holdout

rng = np.random.default_rng(13)
n = 1200
X = rng.uniform(-1, 1, size=(n, 4))  # dims 0,1 interact; 2,3 are noise
y = (X[:, 0] * X[:, 1] > 0).astype(float)
flips = rng.random(n) < 0.1
y[flips] = 1 - y[flips]

schema = [ColumnSchema(f"x{i}", "numeric") for i in range(4)]
schema.append(ColumnSchema("y", "binary", role="target"))
values = np.hstack([X, y[:, None]])
d = Dataset(schema=schema, values=values,
            missing_mask=np.zeros_like(values, dtype=bool))
train, test = split_holdout(d, 0.25, seed=1, stratify=True)

task = TaskSpec("classification")
report = run_study(train, task, default_space(task, train.schema),
                   budget=20, k=3, r=1, seed=3)

print("== leaderboard (top 5 of 20 trials) ==")
ranked = sorted(report.trials, key=lambda t: -t.mean_score)[:5]
for t in ranked:
    c = t.config
    print(f"  {t.mean_score:.3f}  {c.learner.family:<18} imputer={c.imputer.method}"
          f" scaler={c.stage.scaler} dimred={c.stage.dimred}")

ensemble = build_ensemble(report, train, m=3)
held_out = auroc(predict_ensemble(ensemble, test), test.target_vector())
print(f"\nensemble of 3 (softmax posterior weights "
      f"{np.round(ensemble.weights, 3).tolist()})")
print(f"held-out AUROC: {held_out.value:.3f} "
      f"(logistic alone sits near 0.5 on XOR)")

print("\n== which features matter ==")
ranking = effect_size_ranking(train, train.target_vector())
print("effect sizes (|Cohen's d| is blind to the interaction):",
      {n: round(v, 2) for n, v in ranking.ranked()})
importance = permutation_importance(ensemble, test, test.target_vector(),
                                    "auroc", repeats=3, seed=0)
print("permutation importance (sees it):        ",
      {n: round(v, 2) for n, v in importance.ranked()})
