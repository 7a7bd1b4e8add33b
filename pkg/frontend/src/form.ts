/** Form model derived entirely from the server's ui manifest.
 *
 * One control per manifest feature; values are clamped into the manifest's
 * ranges/levels on every set, so an out-of-range value can never reach the
 * wire. No model math happens here — only input bookkeeping.
 */

import type { FeatureValues, Manifest, ManifestFeature } from "./types.js";

export type ControlKind = "slider" | "toggle" | "select";

export interface Control {
  name: string;
  kind: ControlKind;
  featureKind: ManifestFeature["kind"];
  min?: number;
  max?: number;
  step?: number;
  levels?: Array<number | string>;
  defaultValue: number | string;
  group: string;
}

export interface SetResult {
  accepted: boolean;
  clamped: boolean;
  value: number | string;
}

const DEFAULT_GROUP = "general";

export function controlFor(feature: ManifestFeature): Control {
  const group = feature.group ?? DEFAULT_GROUP;
  if (feature.kind === "numeric") {
    const [min, max] = feature.range ?? [0, 1];
    const span = max - min;
    return {
      name: feature.name,
      kind: "slider",
      featureKind: "numeric",
      min,
      max,
      step: span > 0 ? span / 100 : 1,
      defaultValue: feature.default,
      group,
    };
  }
  if (feature.kind === "binary") {
    return {
      name: feature.name,
      kind: "toggle",
      featureKind: "binary",
      levels: [0, 1],
      defaultValue: feature.default,
      group,
    };
  }
  return {
    name: feature.name,
    kind: "select",
    featureKind: "categorical",
    levels: feature.levels ?? [],
    defaultValue: feature.default,
    group,
  };
}

export class FormModel {
  readonly controls: Control[];
  private readonly byName: Map<string, Control>;
  private readonly values = new Map<string, number | string>();
  private readonly dirtyNames = new Set<string>();
  /** server-reported field error, at most one control highlighted */
  fieldError: { field: string; code: string } | null = null;

  constructor(manifest: Manifest) {
    this.controls = manifest.features.map(controlFor);
    this.byName = new Map(this.controls.map((c) => [c.name, c]));
    for (const c of this.controls) this.values.set(c.name, c.defaultValue);
  }

  static fromManifest(manifest: Manifest): FormModel | null {
    if (!manifest.features || manifest.features.length === 0) return null;
    return new FormModel(manifest);
  }

  get empty(): boolean {
    return this.controls.length === 0;
  }

  groups(): Map<string, Control[]> {
    const out = new Map<string, Control[]>();
    for (const c of this.controls) {
      const list = out.get(c.group) ?? [];
      list.push(c);
      out.set(c.group, list);
    }
    return out;
  }

  value(name: string): number | string {
    const v = this.values.get(name);
    if (v === undefined) throw new Error(`unknown control ${name}`);
    return v;
  }

  isDirty(name: string): boolean {
    return this.dirtyNames.has(name);
  }

  /** Clamp-and-set; rejects unknown controls and unknown select levels. */
  setValue(name: string, raw: number | string): SetResult {
    const control = this.byName.get(name);
    if (!control) return { accepted: false, clamped: false, value: raw };
    let value: number | string = raw;
    let clamped = false;
    if (control.kind === "slider") {
      let num = typeof raw === "number" ? raw : Number(raw);
      if (!Number.isFinite(num)) {
        return { accepted: false, clamped: false, value: this.value(name) };
      }
      if (num < control.min!) {
        num = control.min!;
        clamped = true;
      }
      if (num > control.max!) {
        num = control.max!;
        clamped = true;
      }
      value = num;
    } else if (control.kind === "toggle") {
      const num = typeof raw === "number" ? raw : Number(raw);
      if (num !== 0 && num !== 1) {
        return { accepted: false, clamped: false, value: this.value(name) };
      }
      value = num;
    } else {
      if (!control.levels!.includes(raw)) {
        return { accepted: false, clamped: false, value: this.value(name) };
      }
    }
    this.values.set(name, value);
    if (value !== control.defaultValue) this.dirtyNames.add(name);
    else this.dirtyNames.delete(name);
    if (this.fieldError?.field === name) this.fieldError = null;
    return { accepted: true, clamped, value };
  }

  reset(name: string): void {
    const control = this.byName.get(name);
    if (control) this.setValue(name, control.defaultValue);
  }

  /** The exact map sent to the server; always within manifest bounds. */
  payload(): FeatureValues {
    const out: FeatureValues = {};
    for (const c of this.controls) out[c.name] = this.values.get(c.name)!;
    return out;
  }

  applyServerError(body: { code: string; field?: string }): void {
    this.fieldError = body.field ? { field: body.field, code: body.code } : null;
  }
}
