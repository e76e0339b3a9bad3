import { describe, expect, it } from "vitest";
import { buildForm } from "../src/render.js";
import {
  clampValue,
  newFormState,
  setValue,
  toggleComponentUnknown,
  toggleUnknown,
} from "../src/state.js";
import { loadBikeSchema } from "./stub.js";

const schema = loadBikeSchema();

describe("schema-driven form", () => {
  it("renders one section per component (11 for the bike schema)", () => {
    const form = buildForm(schema, newFormState(schema));
    expect(form.sections).toHaveLength(11);
    expect(form.sections.map((s) => s.component)).toEqual(schema.components);
    const total = form.sections.reduce((n, s) => n + s.fields.length, 0);
    expect(total).toBe(61);
  });

  it("numeric features get bounded sliders, categoricals get selects", () => {
    const form = buildForm(schema, newFormState(schema));
    for (const section of form.sections) {
      for (const field of section.fields) {
        const spec = schema.features.find((f) => f.name === field.name)!;
        if (spec.kind === "numeric") {
          expect(field.control).toMatchObject({ kind: "slider", min: spec.range[0], max: spec.range[1] });
        } else {
          expect(field.control).toMatchObject({ kind: "select", options: spec.categories });
        }
      }
    }
  });

  it("slider input cannot produce an out-of-range value", () => {
    const spec = schema.features.find((f) => f.kind === "numeric")!;
    expect(clampValue(spec, 1e9)).toBe(spec.range[1]);
    expect(clampValue(spec, -1e9)).toBe(spec.range[0]);
    const state = setValue(schema, newFormState(schema), spec.name, 1e9);
    expect(state.fields[spec.name].value).toBe(spec.range[1]);
  });

  it("component-level toggle marks every feature of the component unknown", () => {
    const component = schema.components[0];
    const names = schema.features.filter((f) => f.component === component).map((f) => f.name);
    let state = toggleComponentUnknown(schema, newFormState(schema), component);
    for (const n of names) expect(state.fields[n].unknown).toBe(true);
    const form = buildForm(schema, state);
    expect(form.sections[0].allUnknown).toBe(true);
    // toggling again restores all-known
    state = toggleComponentUnknown(schema, state, component);
    for (const n of names) expect(state.fields[n].unknown).toBe(false);
  });

  it("per-feature toggle flips exactly one field", () => {
    const name = schema.features[5].name;
    const state = toggleUnknown(newFormState(schema), name);
    const flipped = Object.keys(state.fields).filter((n) => state.fields[n].unknown);
    expect(flipped).toEqual([name]);
  });

  it("state updates are immutable", () => {
    const before = newFormState(schema);
    const name = schema.features[0].name;
    const after = toggleUnknown(before, name);
    expect(before.fields[name].unknown).toBe(false);
    expect(after.fields[name].unknown).toBe(true);
  });
});
