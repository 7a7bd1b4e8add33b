"""riskstudio: automated pipeline search, explanation, and serving for
tabular diagnostic and prognostic models."""

from .impute import FittedImputer, ImputerConfig, fit_imputer, repeated_impute, transform
from .learners import FittedLearner, LearnerConfig, fit, loss_gradient, loss_value, predict_event_prob, predict_score
from .metrics import (
    MetricResult,
    NetBenefitCurve,
    auroc,
    brier,
    cohens_d,
    concordance_index,
    net_benefit_curve,
    r_squared,
    survival_brier,
)
from .preprocess import FittedStage, StageConfig, apply_stage, fit_stage
from .search import (
    EnsembleModel,
    PipelineConfig,
    SearchSpace,
    StudyReport,
    TrialRecord,
    build_ensemble,
    default_space,
    evaluate_pipeline,
    predict_ensemble,
    predict_ensemble_event_prob,
    propose_next,
    run_study,
)
from .tabular import (
    ColumnSchema,
    Dataset,
    FoldPlan,
    TaskSpec,
    design_matrix,
    load_csv,
    load_schema,
    make_folds,
    split_holdout,
    write_csv,
)

__version__ = "0.1.0"
