import { describe, expect, it } from "vitest";
import { ServiceClient } from "../src/client.js";
import { CompletionController } from "../src/controller.js";
import { buildResults } from "../src/render.js";
import { lockCandidate, newFormState, toggleUnknown, toRequest, unknownFeatures } from "../src/state.js";
import { loadBikeSchema, stubService } from "./stub.js";

const schema = loadBikeSchema();
const numericName = schema.features.find((f) => f.kind === "numeric")!.name;
const otherName = schema.features.filter((f) => f.kind === "numeric")[1]!.name;

describe("lock-candidate loop", () => {
  it("lock then request with nothing unknown echoes the locked design", async () => {
    const stub = stubService(schema);
    const client = new ServiceClient("http://svc", stub.fetch);
    let state = toggleUnknown(toggleUnknown(newFormState(schema), numericName), otherName);
    const first = await client.complete(toRequest(state, 7));
    expect(first.ok).toBe(true);
    if (!first.ok) return;

    state = lockCandidate(schema, state, first.data.completions[3]);
    expect(unknownFeatures(state)).toHaveLength(0);

    const echo = await client.complete(toRequest({ ...state, k: 1 }, 7));
    expect(echo.ok).toBe(true);
    if (echo.ok) {
      expect(echo.data.completions).toHaveLength(1);
      expect(echo.data.completions[0]).toEqual(
        Object.fromEntries(Object.entries(state.fields).map(([n, f]) => [n, f.value])),
      );
    }
  });

  it("lock, un-pin one feature, re-request: new histograms only for that feature", async () => {
    const stub = stubService(schema);
    const client = new ServiceClient("http://svc", stub.fetch);
    let state = toggleUnknown(newFormState(schema), numericName);
    const first = await client.complete(toRequest(state, 1));
    expect(first.ok).toBe(true);
    if (!first.ok) return;

    state = lockCandidate(schema, state, first.data.completions[0]);
    state = toggleUnknown(state, otherName);
    const second = await client.complete(toRequest(state, 2));
    expect(second.ok).toBe(true);
    if (second.ok) {
      expect(Object.keys(second.data.summaries)).toEqual([otherName]);
      const model = buildResults(schema, state, second);
      expect(model.charts.map((c) => c.feature)).toEqual([otherName]);
    }
  });

  it("locked values always pass client-side validation", async () => {
    const stub = stubService(schema);
    const client = new ServiceClient("http://svc", stub.fetch);
    const state = toggleUnknown(newFormState(schema), numericName);
    const result = await client.complete(toRequest(state, 9));
    expect(result.ok).toBe(true);
    if (!result.ok) return;
    const locked = lockCandidate(schema, state, result.data.completions[0]);
    // a follow-up request with the locked values must not 400
    const echo = await client.complete(toRequest({ ...locked, k: 1 }));
    expect(echo.ok).toBe(true);
  });
});

describe("request serialization", () => {
  it("keeps a single request in flight and replays the latest queued submission", async () => {
    const schemaSmall = loadBikeSchema();
    const stub = stubService(schemaSmall);
    const client = new ServiceClient("http://svc", stub.fetch);
    const results: number[] = [];
    const controller = new CompletionController(client, (r) => {
      if (r.ok) results.push(r.data.seed);
    });
    const state = toggleUnknown(newFormState(schemaSmall), numericName);
    const p1 = controller.submit(state, 1);
    // submitted while busy: both queue behind the active request, last wins
    const p2 = controller.submit(state, 2);
    const p3 = controller.submit(state, 3);
    await Promise.all([p1, p2, p3]);
    expect(results).toEqual([1, 3]);
    expect(stub.requests.map((r) => r.seed)).toEqual([1, 3]);
  });
});
