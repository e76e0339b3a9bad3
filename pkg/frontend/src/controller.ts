import { ServiceClient } from "./client.js";
import type { DesignFormState } from "./state.js";
import { toRequest } from "./state.js";
import type { CompleteResult } from "./types.js";

/** Serializes completion requests: one in flight, at most one queued (the
 * latest submission wins). The form state used for a queued submission is the
 * one captured at submit time. */
export class CompletionController {
  private inFlight = false;
  private queued: { state: DesignFormState; seed?: number } | null = null;
  lastResult: CompleteResult | undefined;

  constructor(
    private readonly client: ServiceClient,
    private readonly onResult: (result: CompleteResult) => void = () => {},
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  async submit(state: DesignFormState, seed?: number): Promise<void> {
    if (this.inFlight) {
      this.queued = { state, seed };
      return;
    }
    this.inFlight = true;
    try {
      const result = await this.client.complete(toRequest(state, seed));
      this.lastResult = result;
      this.onResult(result);
    } finally {
      this.inFlight = false;
    }
    const next = this.queued;
    this.queued = null;
    if (next) await this.submit(next.state, next.seed);
  }
}
