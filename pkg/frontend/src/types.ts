/** Wire types for the completion service (/v1/schema and /v1/complete). */

export interface NumericFeature {
  name: string;
  kind: "numeric";
  component: string;
  range: [number, number];
}

export interface CategoricalFeature {
  name: string;
  kind: "categorical";
  component: string;
  categories: string[];
}

export type Feature = NumericFeature | CategoricalFeature;

export interface SchemaPayload {
  features: Feature[];
  components: string[];
  graph_edges: [string, string][];
}

export type Value = number | string;

export interface CompletionRequest {
  observed: Record<string, Value>;
  k: number;
  seed?: number;
}

export interface NumericSummary {
  kind: "numeric";
  mean: number;
  min: number;
  max: number;
  histogram: { edges: number[]; counts: number[] };
}

export interface CategoricalSummary {
  kind: "categorical";
  mode: string;
  counts: Record<string, number>;
}

export type Summary = NumericSummary | CategoricalSummary;

export interface CompletionResponse {
  model_version: string;
  seed: number;
  k: number;
  completions: Record<string, Value>[];
  summaries: Record<string, Summary>;
}

/** 400-level body: a named offending field plus a human-readable detail. */
export interface FieldError {
  detail: string;
  field?: string;
}

export type CompleteResult =
  | { ok: true; data: CompletionResponse; nothingToImpute: boolean }
  | { ok: false; kind: "field"; error: FieldError }
  | { ok: false; kind: "unreachable"; message: string };

export function isNumeric(f: Feature): f is NumericFeature {
  return f.kind === "numeric";
}
