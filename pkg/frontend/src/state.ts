import type { CompletionRequest, Feature, SchemaPayload, Value } from "./types.js";
import { isNumeric } from "./types.js";

export interface FieldState {
  value: Value;
  unknown: boolean;
}

/** Immutable form state: one entry per schema feature, keyed by name. */
export interface DesignFormState {
  fields: Record<string, FieldState>;
  k: number;
}

function defaultValue(f: Feature): Value {
  if (isNumeric(f)) {
    const [lo, hi] = f.range;
    return (lo + hi) / 2;
  }
  return f.categories[0];
}

export function newFormState(schema: SchemaPayload, k = 50): DesignFormState {
  const fields: Record<string, FieldState> = {};
  for (const f of schema.features) {
    fields[f.name] = { value: defaultValue(f), unknown: false };
  }
  return { fields, k };
}

function featureByName(schema: SchemaPayload, name: string): Feature {
  const f = schema.features.find((f) => f.name === name);
  if (!f) throw new Error(`unknown feature: ${name}`);
  return f;
}

/** Clamp numerics into range and reject unknown categories: the client never
 * sends a value the server would 400 on shape grounds. */
export function clampValue(f: Feature, value: Value): Value {
  if (isNumeric(f)) {
    const [lo, hi] = f.range;
    const v = typeof value === "number" ? value : Number(value);
    if (Number.isNaN(v)) return (lo + hi) / 2;
    return Math.min(hi, Math.max(lo, v));
  }
  return f.categories.includes(String(value)) ? String(value) : f.categories[0];
}

export function setValue(
  schema: SchemaPayload,
  state: DesignFormState,
  name: string,
  value: Value,
): DesignFormState {
  const f = featureByName(schema, name);
  return {
    ...state,
    fields: { ...state.fields, [name]: { ...state.fields[name], value: clampValue(f, value) } },
  };
}

export function toggleUnknown(state: DesignFormState, name: string): DesignFormState {
  const cur = state.fields[name];
  if (!cur) throw new Error(`unknown feature: ${name}`);
  return { ...state, fields: { ...state.fields, [name]: { ...cur, unknown: !cur.unknown } } };
}

/** Component-level bulk toggle: marks every feature of the component unknown
 * (or, if all are already unknown, back to known). */
export function toggleComponentUnknown(
  schema: SchemaPayload,
  state: DesignFormState,
  component: string,
): DesignFormState {
  const names = schema.features.filter((f) => f.component === component).map((f) => f.name);
  if (names.length === 0) throw new Error(`unknown component: ${component}`);
  const allUnknown = names.every((n) => state.fields[n].unknown);
  const fields = { ...state.fields };
  for (const n of names) fields[n] = { ...fields[n], unknown: !allUnknown };
  return { ...state, fields };
}

/** Copy a chosen completion's values into the form as pinned entries. */
export function lockCandidate(
  schema: SchemaPayload,
  state: DesignFormState,
  completion: Record<string, Value>,
): DesignFormState {
  const fields = { ...state.fields };
  for (const f of schema.features) {
    const v = completion[f.name];
    if (v === undefined) throw new Error(`completion missing feature: ${f.name}`);
    fields[f.name] = { value: clampValue(f, v), unknown: false };
  }
  return { ...state, fields };
}

export function unknownFeatures(state: DesignFormState): string[] {
  return Object.keys(state.fields).filter((n) => state.fields[n].unknown);
}

export function toRequest(state: DesignFormState, seed?: number): CompletionRequest {
  const observed: Record<string, Value> = {};
  for (const [name, field] of Object.entries(state.fields)) {
    if (!field.unknown) observed[name] = field.value;
  }
  const req: CompletionRequest = { observed, k: state.k };
  if (seed !== undefined) req.seed = seed;
  return req;
}
