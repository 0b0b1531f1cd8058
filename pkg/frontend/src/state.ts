import type { AttributeDoc, Profile, SchemaDoc } from './types.js';

// Reserved query parameters that are not profile fields.
const RESERVED = new Set(['service', 'whatif']);

export function predictors(schema: SchemaDoc): AttributeDoc[] {
  return schema.attributes.filter((a) => a.role !== 'class');
}

export function classAttribute(schema: SchemaDoc): AttributeDoc {
  const found = schema.attributes.find((a) => a.role === 'class');
  if (!found) throw new Error('schema has no class attribute');
  return found;
}

/** Submit is allowed only when every predictor has a valid selection. */
export function isComplete(schema: SchemaDoc, selection: Profile): boolean {
  return predictors(schema).every(
    (a) => selection[a.name] !== undefined && a.levels.includes(selection[a.name]),
  );
}

/** Selected levels that are valid under the schema (drops the rest). */
export function sanitize(schema: SchemaDoc, selection: Profile): Profile {
  const out: Profile = {};
  for (const attr of predictors(schema)) {
    const value = selection[attr.name];
    if (value !== undefined && attr.levels.includes(value)) {
      out[attr.name] = value;
    }
  }
  return out;
}

/**
 * Form state round-trips through the URL query string so profiles are
 * shareable links.  Attribute names and levels are encoded verbatim.
 */
export function selectionToQuery(selection: Profile, whatifAttr?: string): string {
  const params = new URLSearchParams();
  for (const [key, value] of Object.entries(selection)) {
    params.set(key, value);
  }
  if (whatifAttr) {
    params.set('whatif', whatifAttr);
  }
  return params.toString();
}

export function selectionFromQuery(
  schema: SchemaDoc,
  query: string,
): { selection: Profile; whatifAttr: string | null } {
  const params = new URLSearchParams(query);
  const raw: Profile = {};
  for (const [key, value] of params.entries()) {
    if (!RESERVED.has(key)) {
      raw[key] = value;
    }
  }
  const whatif = params.get('whatif');
  const names = new Set(predictors(schema).map((a) => a.name));
  return {
    selection: sanitize(schema, raw),
    whatifAttr: whatif && names.has(whatif) ? whatif : null,
  };
}

/** Probability bar widths in percent; proportional to the vector. */
export function barWidths(probabilities: number[]): number[] {
  return probabilities.map((p) => p * 100);
}

export function formatProbability(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

export function formatDelta(d: number): string {
  const pts = d * 100;
  const sign = pts > 0 ? '+' : '';
  return `${sign}${pts.toFixed(1)} pp`;
}
