import { describe, expect, it } from 'vitest';

import {
  barWidths,
  formatDelta,
  isComplete,
  predictors,
  sanitize,
  selectionFromQuery,
  selectionToQuery,
} from '../src/state.js';
import { SCHEMA } from './fixtures.js';

describe('form model', () => {
  it('lists predictors in schema order, class excluded', () => {
    expect(predictors(SCHEMA).map((a) => a.name)).toEqual(['Activity', 'Gender']);
  });

  it('submit gating requires every predictor', () => {
    expect(isComplete(SCHEMA, {})).toBe(false);
    expect(isComplete(SCHEMA, { Activity: 'Employed' })).toBe(false);
    expect(isComplete(SCHEMA, { Activity: 'Employed', Gender: 'Male' })).toBe(true);
  });

  it('rejects unknown levels', () => {
    expect(isComplete(SCHEMA, { Activity: 'Nope', Gender: 'Male' })).toBe(false);
    expect(sanitize(SCHEMA, { Activity: 'Nope', Gender: 'Male', Junk: 'x' })).toEqual({
      Gender: 'Male',
    });
  });
});

describe('URL round trip', () => {
  it('selection survives query-string encoding', () => {
    const selection = { Activity: 'Employed', Gender: 'Female' };
    const query = selectionToQuery(selection);
    const back = selectionFromQuery(SCHEMA, query);
    expect(back.selection).toEqual(selection);
    expect(back.whatifAttr).toBeNull();
  });

  it('carries the chosen what-if attribute', () => {
    const query = selectionToQuery({ Gender: 'Male' }, 'Activity');
    const back = selectionFromQuery(SCHEMA, query);
    expect(back.whatifAttr).toBe('Activity');
  });

  it('handles spaces and slashes in names and levels', () => {
    const schema = {
      attributes: [
        {
          name: 'Educational Level',
          levels: ['No Schooling/Grade 1-5', 'Grade 6-11'],
          role: 'predictor' as const,
        },
        { name: 'cls', levels: ['a', 'b'], role: 'class' as const },
      ],
      schema_hash: 'h',
    };
    const selection = { 'Educational Level': 'No Schooling/Grade 1-5' };
    const back = selectionFromQuery(schema, selectionToQuery(selection));
    expect(back.selection).toEqual(selection);
  });

  it('ignores the reserved service parameter', () => {
    const back = selectionFromQuery(SCHEMA, 'service=http%3A%2F%2Fx&Gender=Male');
    expect(back.selection).toEqual({ Gender: 'Male' });
  });

  it('drops unknown or invalid entries from shared links', () => {
    const back = selectionFromQuery(SCHEMA, 'Gender=Martian&Activity=Student&junk=1');
    expect(back.selection).toEqual({ Activity: 'Student' });
  });
});

describe('display helpers', () => {
  it('bar widths are proportional percentages', () => {
    expect(barWidths([0.2, 0.3, 0.5])).toEqual([20, 30, 50]);
  });

  it('deltas format as signed percentage points', () => {
    expect(formatDelta(0.123)).toBe('+12.3 pp');
    expect(formatDelta(-0.05)).toBe('-5.0 pp');
    expect(formatDelta(0)).toBe('0.0 pp');
  });
});
