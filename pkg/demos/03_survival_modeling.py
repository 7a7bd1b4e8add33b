"""Cox proportional hazards and Weibull AFT on synthetic time-to-event data.

Simulates a proportional-hazards cohort with known coefficients and ~30%
censoring, recovers the coefficients, and reads event probabilities at a
clinical horizon off the fitted baseline hazard.
"""

import numpy as np

from riskstudio.learners import LearnerConfig, fit, predict_event_prob, predict_score
from riskstudio.metrics import concordance_index, survival_brier

rng = np.random.default_rng(7)
n = 3000
beta_true = np.array([0.8, -0.5])
X = rng.normal(size=(n, 2))
T = -np.log(rng.random(n)) / (0.1 * np.exp(X @ beta_true))
C = rng.exponential(scale=np.quantile(T, 0.8) * 1.35, size=n)
times = np.minimum(T, C)
events = (T <= C).astype(float)
print(f"cohort: n={n}, events={int(events.sum())}, "
      f"censoring={1 - events.mean():.0%}, true beta={beta_true.tolist()}\n")

cox = fit(LearnerConfig("cox_ph", {"l2": 0.0}), X, (times, events), seed=0)
print(f"cox beta-hat     : {np.round(cox.state['beta'], 3).tolist()}")

aft = fit(LearnerConfig("weibull_aft", {"l2": 0.0}), X, (times, events), seed=0)
print(f"weibull beta-hat : {np.round(aft.state['beta'], 3).tolist()} "
      f"(AFT scale; shape k={1 / aft.state['sigma']:.2f})\n")

horizon = float(np.quantile(times, 0.5))
for name, model in (("cox_ph", cox), ("weibull_aft", aft)):
    risks = predict_score(model, X)
    probs = predict_event_prob(model, X, horizon)
    c = concordance_index(risks, times, events)
    b = survival_brier(probs, times, events, horizon)
    print(f"{name:<12} C-index {c.value:.3f}  "
          f"Brier@{horizon:.1f} {b.value:.3f} (n_eff={b.n_effective})")

print("\nevent probability is 1 - S0(h)^exp(beta'x) with the Breslow baseline;")
print("both models agree with the generating hazard's ordering of subjects.")
