import type {
  FieldError,
  Profile,
  SchemaDoc,
  WhatifOverride,
  WhatifResponse,
} from './types.js';
import { predictors } from './state.js';

/** One override per level of the chosen attribute, in schema order. */
export function overridesForAttribute(
  schema: SchemaDoc,
  attribute: string,
): WhatifOverride[] {
  const attr = predictors(schema).find((a) => a.name === attribute);
  if (!attr) throw new Error(`unknown predictor ${attribute}`);
  return attr.levels.map((level) => ({ attribute, level }));
}

export interface GridCell {
  level: string;
  isCurrent: boolean;
  status: 'ok' | 'error';
  predictedClass?: string;
  probabilities?: number[];
  delta?: number[];
  errors?: FieldError[];
}

export interface WhatifGrid {
  attribute: string;
  classLabels: string[];
  cells: GridCell[];
  /** per class index, the grid level that maximizes its probability */
  bestLevelPerClass: (string | null)[];
}

/** Shape a /whatif response into one cell per level of the attribute. */
export function buildGrid(
  schema: SchemaDoc,
  base: Profile,
  attribute: string,
  response: WhatifResponse,
): WhatifGrid {
  const classLabels = response.base.model_prediction.class_labels;
  const byLevel = new Map(
    response.results.map((r) => [r.override.level, r] as const),
  );
  const attr = predictors(schema).find((a) => a.name === attribute);
  if (!attr) throw new Error(`unknown predictor ${attribute}`);

  const cells: GridCell[] = attr.levels.map((level) => {
    const result = byLevel.get(level);
    if (!result) {
      return {
        level,
        isCurrent: base[attribute] === level,
        status: 'error',
        errors: [{ field: attribute, message: 'no result returned' }],
      };
    }
    if (result.status !== 'ok' || !result.prediction) {
      return {
        level,
        isCurrent: base[attribute] === level,
        status: 'error',
        errors: result.errors ?? [],
      };
    }
    return {
      level,
      isCurrent: base[attribute] === level,
      status: 'ok',
      predictedClass: result.prediction.model_prediction.class,
      probabilities: result.prediction.model_prediction.probabilities,
      delta: result.delta,
    };
  });

  const bestLevelPerClass = classLabels.map((_, k) => {
    let best: string | null = null;
    let bestP = -Infinity;
    for (const cell of cells) {
      if (cell.status === 'ok' && cell.probabilities && cell.probabilities[k] > bestP) {
        bestP = cell.probabilities[k];
        best = cell.level;
      }
    }
    return best;
  });

  return { attribute, classLabels, cells, bestLevelPerClass };
}
