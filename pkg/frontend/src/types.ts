// Wire types for the decision-support service (GET /schema,
// POST /predict, POST /whatif).  The UI never computes statistics
// itself; every number shown comes from one of these payloads.

export interface AttributeDoc {
  name: string;
  levels: string[];
  role: 'predictor' | 'class';
}

export interface SchemaDoc {
  attributes: AttributeDoc[];
  schema_hash: string;
}

export interface FieldError {
  field: string;
  message: string;
}

export interface RulePrediction {
  class: string;
  rule: string;
  backoff: boolean;
}

export interface ModelPrediction {
  class: string;
  class_labels: string[];
  probabilities: number[];
}

export interface ModelInfo {
  deviance: number;
  n_params: number;
  schema_hash: string;
}

export interface PredictionResponse {
  input: Record<string, string>;
  rule_prediction: RulePrediction;
  model_prediction: ModelPrediction;
  agreement: boolean;
  model_info: ModelInfo;
}

export interface WhatifOverride {
  attribute: string;
  level: string;
}

export interface WhatifResult {
  override: WhatifOverride;
  status: 'ok' | 'error';
  prediction?: PredictionResponse;
  delta?: number[];
  errors?: FieldError[];
}

export interface WhatifResponse {
  base: PredictionResponse;
  results: WhatifResult[];
}

export type Profile = Record<string, string>;
