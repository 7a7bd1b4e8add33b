/** Wire types for the riskstudio serving API. */

export type FeatureKind = "numeric" | "binary" | "categorical";

export interface ManifestFeature {
  name: string;
  kind: FeatureKind;
  /** numeric features: observed training range */
  range?: [number, number];
  /** binary/categorical features: allowed values */
  levels?: Array<number | string>;
  default: number | string;
  /** optional display grouping (e.g. "laboratory") */
  group?: string;
}

export interface Manifest {
  format_version: string;
  task: "classification" | "regression" | "survival";
  metric: string;
  horizon: number | null;
  study_seed: number;
  features: ManifestFeature[];
}

export type FeatureValues = Record<string, number | string>;

export interface PredictResponse {
  risk: number;
  event_prob_at_horizon?: number;
  horizon?: number;
  relative_risk?: number;
  warnings?: string[];
  request_id?: string;
}

export interface WhatIfResponse {
  base_risk: number;
  new_risk: number;
  delta: number;
  warnings?: string[];
  request_id?: string;
}

export interface Attribution {
  feature: string;
  value: number;
}

export interface ExplainResponse {
  attributions: Attribution[];
  prediction: number;
  background_mean: number;
  total_se: number;
  n_samples: number;
  warnings?: string[];
  request_id?: string;
}

export interface ApiErrorBody {
  code: string;
  field?: string;
  detail?: string;
}
