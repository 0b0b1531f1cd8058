import type { PredictionResponse, SchemaDoc, WhatifResponse } from '../src/types.js';

export const SCHEMA: SchemaDoc = {
  attributes: [
    { name: 'Activity', levels: ['Employed', 'Unemployed', 'Student'], role: 'predictor' },
    { name: 'Gender', levels: ['Male', 'Female'], role: 'predictor' },
    { name: 'Desire', levels: ['Tech', 'Uni', 'None'], role: 'class' },
  ],
  schema_hash: 'fixture-hash',
};

export function prediction(overrides: Partial<PredictionResponse> = {}): PredictionResponse {
  return {
    input: { Activity: 'Employed', Gender: 'Male' },
    rule_prediction: {
      class: 'None',
      rule: 'Rule 3: Activity=Employed ^ Gender=Male\n None',
      backoff: false,
    },
    model_prediction: {
      class: 'None',
      class_labels: ['Tech', 'Uni', 'None'],
      probabilities: [0.2, 0.3, 0.5],
    },
    agreement: true,
    model_info: { deviance: 123.4, n_params: 8, schema_hash: 'fixture-hash' },
    ...overrides,
  };
}

export function whatifResponse(): WhatifResponse {
  const base = prediction();
  return {
    base,
    results: [
      {
        override: { attribute: 'Activity', level: 'Employed' },
        status: 'ok',
        prediction: base,
        delta: [0, 0, 0],
      },
      {
        override: { attribute: 'Activity', level: 'Unemployed' },
        status: 'ok',
        prediction: prediction({
          model_prediction: {
            class: 'Tech',
            class_labels: ['Tech', 'Uni', 'None'],
            probabilities: [0.6, 0.1, 0.3],
          },
        }),
        delta: [0.4, -0.2, -0.2],
      },
      {
        override: { attribute: 'Activity', level: 'Student' },
        status: 'error',
        errors: [{ field: 'Activity', message: "unknown level 'Student'" }],
      },
    ],
  };
}
