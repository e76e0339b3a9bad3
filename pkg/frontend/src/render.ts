/** Pure render models: every function here is a pure function of
 * (schema payload, form state, last result) and performs no I/O. */

import { HistogramModel, histogramModel } from "./histogram.js";
import type { DesignFormState } from "./state.js";
import { unknownFeatures } from "./state.js";
import type { CompleteResult, Feature, SchemaPayload, Value } from "./types.js";
import { isNumeric } from "./types.js";

// --- form ---------------------------------------------------------------------

export interface SliderControl {
  kind: "slider";
  min: number;
  max: number;
  value: number;
}

export interface SelectControl {
  kind: "select";
  options: string[];
  value: string;
}

export interface FieldModel {
  name: string;
  unknown: boolean;
  control: SliderControl | SelectControl;
  /** inline error from the last failed request, if it named this field */
  error?: string;
}

export interface SectionModel {
  component: string;
  allUnknown: boolean;
  fields: FieldModel[];
}

export interface FormModel {
  sections: SectionModel[];
}

function control(f: Feature, value: Value): SliderControl | SelectControl {
  if (isNumeric(f)) {
    return { kind: "slider", min: f.range[0], max: f.range[1], value: Number(value) };
  }
  return { kind: "select", options: f.categories, value: String(value) };
}

export function buildForm(
  schema: SchemaPayload,
  state: DesignFormState,
  lastResult?: CompleteResult,
): FormModel {
  const fieldError =
    lastResult && !lastResult.ok && lastResult.kind === "field" ? lastResult.error : undefined;
  const sections: SectionModel[] = schema.components.map((component) => {
    const fields = schema.features
      .filter((f) => f.component === component)
      .map((f) => {
        const fs = state.fields[f.name];
        const model: FieldModel = {
          name: f.name,
          unknown: fs.unknown,
          control: control(f, fs.value),
        };
        if (fieldError && fieldError.field === f.name) model.error = fieldError.detail;
        return model;
      });
    return { component, allUnknown: fields.length > 0 && fields.every((f) => f.unknown), fields };
  });
  return { sections };
}

// --- results ------------------------------------------------------------------

export interface CandidateRow {
  index: number;
  values: Record<string, Value>;
}

export interface NumericResultModel {
  feature: string;
  kind: "numeric";
  histogram: HistogramModel;
}

export interface CategoricalResultModel {
  feature: string;
  kind: "categorical";
  counts: Record<string, number>;
  mode: string;
}

export interface ResultsModel {
  status: "idle" | "ok" | "nothing-to-impute" | "field-error" | "unreachable";
  /** present on "unreachable": safe to retry, form state untouched */
  retryable: boolean;
  notice?: string;
  table: CandidateRow[];
  charts: (NumericResultModel | CategoricalResultModel)[];
}

export function buildResults(
  schema: SchemaPayload,
  state: DesignFormState,
  result?: CompleteResult,
): ResultsModel {
  if (!result) {
    return { status: "idle", retryable: false, table: [], charts: [] };
  }
  if (!result.ok) {
    if (result.kind === "unreachable") {
      return {
        status: "unreachable",
        retryable: true,
        notice: `service unreachable: ${result.message}`,
        table: [],
        charts: [],
      };
    }
    return {
      status: "field-error",
      retryable: false,
      notice: result.error.detail,
      table: [],
      charts: [],
    };
  }
  const { data } = result;
  const table = data.completions.map((values, index) => ({ index, values }));
  const charts: (NumericResultModel | CategoricalResultModel)[] = [];
  for (const f of schema.features) {
    const summary = data.summaries[f.name];
    if (!summary) continue;
    if (summary.kind === "numeric") {
      charts.push({
        feature: f.name,
        kind: "numeric",
        histogram: histogramModel(summary.histogram.edges, summary.histogram.counts, summary.mean),
      });
    } else {
      charts.push({ feature: f.name, kind: "categorical", counts: summary.counts, mode: summary.mode });
    }
  }
  if (result.nothingToImpute || unknownFeatures(state).length === 0) {
    return {
      status: "nothing-to-impute",
      retryable: false,
      notice: "nothing to impute",
      table: table.slice(0, 1),
      charts,
    };
  }
  return { status: "ok", retryable: false, table, charts };
}
