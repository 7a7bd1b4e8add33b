/** What-if exploration: pin a baseline, adjust overrides, read the server's
 * delta verbatim, and keep a client-side history of the session's probes. */

import { ApiClient, ApiError, Superseded } from "./api.js";
import type { FeatureValues, WhatIfResponse } from "./types.js";

export interface WhatIfProbe {
  overrides: FeatureValues;
  response: WhatIfResponse;
}

export class WhatIfPanel {
  baseline: FeatureValues | null = null;
  readonly overrides: Map<string, number | string> = new Map();
  latest: WhatIfResponse | null = null;
  readonly history: WhatIfProbe[] = [];
  error: string | null = null;

  constructor(private readonly api: ApiClient) {}

  pinBaseline(values: FeatureValues): void {
    this.baseline = { ...values };
    this.overrides.clear();
    this.latest = null;
  }

  setOverride(name: string, value: number | string): void {
    if (this.baseline && this.baseline[name] === value) {
      // an override equal to the pinned value is a revert
      this.overrides.delete(name);
    } else {
      this.overrides.set(name, value);
    }
  }

  clearOverride(name: string): void {
    this.overrides.delete(name);
  }

  overridesPayload(): FeatureValues {
    return Object.fromEntries(this.overrides);
  }

  /** POST /whatif with the pinned baseline and current overrides. */
  async refresh(): Promise<WhatIfResponse | null> {
    if (!this.baseline) return null;
    const overrides = this.overridesPayload();
    try {
      const response = await this.api.whatif(this.baseline, overrides);
      this.latest = response;
      this.error = null;
      this.history.push({ overrides, response });
      return response;
    } catch (err) {
      if (err instanceof Superseded) return null;
      this.error = err instanceof ApiError ? err.message : (err as Error).message;
      return null;
    }
  }
}
