"""Chained-equations imputation versus column means on correlated data.

Generates correlated Gaussians, knocks out 20% of cells completely at random,
and measures masked-cell RMSE for each method, including the automated
per-column model selection.
"""

import numpy as np

from riskstudio.impute import ImputerConfig, fit_imputer, transform
from riskstudio.tabular import ColumnSchema, Dataset

rng = np.random.default_rng(42)
n, p, rho = 400, 5, 0.8
cov = np.full((p, p), rho) + (1 - rho) * np.eye(p)
truth = rng.multivariate_normal(np.zeros(p), cov, size=n)

mask = rng.random(truth.shape) < 0.2
schema = [ColumnSchema(f"x{i}", "numeric") for i in range(p)]
masked = Dataset(schema=schema, values=truth.copy(), missing_mask=mask)
print(f"{mask.sum()} of {mask.size} cells masked completely at random\n")

print(f"{'method':<14} {'masked-cell RMSE':>16}  notes")
for method in ("mean", "median", "iterative", "auto"):
    imp = fit_imputer(masked, ImputerConfig(method), seed=0)
    out = transform(imp, masked)
    rmse = np.sqrt(np.mean((out.values[mask] - truth[mask]) ** 2))
    note = ""
    if method in ("iterative", "auto"):
        note = f"rounds={imp.rounds_run}, converged={imp.converged}"
    if method == "auto":
        picks = sorted(set(imp.selected.values()))
        note += f", per-column picks={picks}"
    print(f"{method:<14} {rmse:>16.4f}  {note}")

print("\nchained equations exploit the correlation structure that a column")
print("mean ignores; the auto variant re-selects each column's model per round.")
