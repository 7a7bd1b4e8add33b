/** Attribution view model: server Shapley values sorted by magnitude, the
 * top 20 shown before expansion, failures degrading to prediction-only. */

import { ApiClient, Superseded } from "./api.js";
import type { Attribution, ExplainResponse, FeatureValues } from "./types.js";

export const TOP_N = 20;
export const DEFAULT_SAMPLES = 500;

export interface Bar {
  feature: string;
  /** verbatim server value; sign decides the color, magnitude the length */
  value: number;
  positive: boolean;
}

export class AttributionView {
  response: ExplainResponse | null = null;
  expanded = false;
  /** explanation failed; the caller should fall back to prediction-only */
  degraded = false;

  constructor(
    private readonly api: ApiClient,
    private readonly nSamples: number = DEFAULT_SAMPLES,
  ) {}

  async refresh(features: FeatureValues): Promise<void> {
    try {
      this.response = await this.api.explain(features, this.nSamples);
      this.degraded = false;
    } catch (err) {
      if (err instanceof Superseded) return;
      this.degraded = true;
    }
  }

  private sorted(): Attribution[] {
    if (!this.response) return [];
    return [...this.response.attributions].sort(
      (a, b) => Math.abs(b.value) - Math.abs(a.value),
    );
  }

  bars(): Bar[] {
    const rows = this.sorted();
    const shown = this.expanded ? rows : rows.slice(0, TOP_N);
    return shown.map((r) => ({
      feature: r.feature,
      value: r.value,
      positive: r.value >= 0,
    }));
  }

  hiddenCount(): number {
    const total = this.response?.attributions.length ?? 0;
    return this.expanded ? 0 : Math.max(0, total - TOP_N);
  }

  toggleExpanded(): void {
    this.expanded = !this.expanded;
  }
}
