/** Live risk readout: debounced predictions with stale-but-visible fallback.
 *
 * Every number displayed comes verbatim from the last server response; on
 * network failure the previous value stays on screen flagged as stale, and a
 * field-level 400 is routed back to the form.
 */

import { ApiClient, ApiError, Superseded } from "./api.js";
import type { FormModel } from "./form.js";
import type { FeatureValues, Manifest, PredictResponse } from "./types.js";

export const DEBOUNCE_MS = 300;

export interface RiskState {
  response: PredictResponse | null;
  stale: boolean;
  pending: boolean;
  networkError: string | null;
}

type Scheduler = (fn: () => void, ms: number) => unknown;
type Canceller = (handle: unknown) => void;

export class LiveRisk {
  readonly state: RiskState = {
    response: null,
    stale: false,
    pending: false,
    networkError: null,
  };
  private timer: unknown = null;
  private listeners: Array<(s: RiskState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly form: FormModel,
    private readonly debounceMs: number = DEBOUNCE_MS,
    private readonly schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private readonly cancel: Canceller = (h) => clearTimeout(h as number),
  ) {}

  onUpdate(fn: (s: RiskState) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  /** Called on every form input; coalesces bursts into one request. */
  valuesChanged(): void {
    if (this.timer !== null) this.cancel(this.timer);
    this.timer = this.schedule(() => {
      this.timer = null;
      void this.send(this.form.payload());
    }, this.debounceMs);
  }

  /** Immediate request (used for the initial render). */
  async refresh(): Promise<void> {
    await this.send(this.form.payload());
  }

  private async send(features: FeatureValues): Promise<void> {
    this.state.pending = true;
    this.emit();
    try {
      const response = await this.api.predict(features);
      this.state.response = response;
      this.state.stale = false;
      this.state.networkError = null;
      this.form.fieldError = null;
    } catch (err) {
      if (err instanceof Superseded) return; // a newer request took over
      if (err instanceof ApiError) {
        this.form.applyServerError(err.body);
        this.state.stale = this.state.response !== null;
      } else {
        this.state.networkError = (err as Error).message;
        this.state.stale = this.state.response !== null;
      }
    } finally {
      this.state.pending = false;
      this.emit();
    }
  }
}

/** Percentage text for classification/survival; plain value for regression. */
export function formatRisk(manifest: Manifest, response: PredictResponse): string {
  if (manifest.task === "regression") return response.risk.toPrecision(6);
  const pct = (response.risk * 100).toFixed(1) + "%";
  if (manifest.task === "survival" && response.horizon != null) {
    return `${pct} within ${response.horizon} time units`;
  }
  return pct;
}
