import type {
  CompleteResult,
  CompletionRequest,
  CompletionResponse,
  SchemaPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the two service endpoints. */
export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  async getSchema(): Promise<SchemaPayload> {
    const res = await this.fetchImpl(`${this.baseUrl}/v1/schema`);
    if (!res.ok) throw new Error(`schema fetch failed: HTTP ${res.status}`);
    return (await res.json()) as SchemaPayload;
  }

  async complete(request: CompletionRequest): Promise<CompleteResult> {
    let res: Response;
    try {
      res = await this.fetchImpl(`${this.baseUrl}/v1/complete`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
      });
    } catch (err) {
      return { ok: false, kind: "unreachable", message: String(err) };
    }
    if (res.status === 400) {
      const body = (await res.json()) as { detail: string; field?: string };
      return { ok: false, kind: "field", error: body };
    }
    if (res.status === 422) {
      // nothing to impute with k > 1: the body still carries the echo copies
      const body = (await res.json()) as CompletionResponse;
      if (Array.isArray(body.completions)) {
        return { ok: true, data: body, nothingToImpute: true };
      }
      return { ok: false, kind: "field", error: { detail: "invalid request" } };
    }
    if (!res.ok) {
      return { ok: false, kind: "unreachable", message: `HTTP ${res.status}` };
    }
    const data = (await res.json()) as CompletionResponse;
    return { ok: true, data, nothingToImpute: Object.keys(data.summaries).length === 0 };
  }
}
