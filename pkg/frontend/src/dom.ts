/** Thin DOM layer: maps form-model controls to elements one-to-one and keeps
 * readouts in sync. All numbers shown are verbatim server payload values. */

import type { AttributionView } from "./attribution.js";
import type { Control, FormModel } from "./form.js";
import { formatRisk, type LiveRisk } from "./risk.js";
import type { Manifest } from "./types.js";
import type { WhatIfPanel } from "./whatif.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderControl(
  control: Control,
  form: FormModel,
  onInput: () => void,
): HTMLElement {
  const wrap = el("label", "control");
  wrap.dataset.feature = control.name;
  wrap.append(el("span", "control-name", control.name));
  let input: HTMLInputElement | HTMLSelectElement;
  if (control.kind === "select") {
    input = el("select");
    for (const level of control.levels ?? []) {
      const opt = el("option", undefined, String(level));
      opt.value = String(level);
      input.append(opt);
    }
    input.value = String(control.defaultValue);
  } else if (control.kind === "toggle") {
    input = el("input");
    input.type = "checkbox";
    input.checked = control.defaultValue === 1;
  } else {
    input = el("input");
    input.type = "number";
    input.min = String(control.min);
    input.max = String(control.max);
    input.step = String(control.step);
    input.value = String(control.defaultValue);
  }
  input.addEventListener("input", () => {
    let raw: number | string;
    if (control.kind === "toggle") {
      raw = (input as HTMLInputElement).checked ? 1 : 0;
    } else if (control.kind === "select") {
      raw = input.value;
    } else {
      raw = Number(input.value);
    }
    const result = form.setValue(control.name, raw);
    if (result.clamped && control.kind === "slider") {
      input.value = String(result.value); // never display out-of-range input
    }
    onInput();
  });
  wrap.append(input);
  return wrap;
}

export function renderForm(
  manifest: Manifest,
  form: FormModel,
  root: HTMLElement,
  onInput: () => void,
): void {
  root.textContent = "";
  for (const [group, controls] of form.groups()) {
    const section = el("fieldset", "group");
    section.append(el("legend", undefined, group));
    for (const control of controls) {
      section.append(renderControl(control, form, onInput));
    }
    root.append(section);
  }
}

export function renderRisk(
  manifest: Manifest,
  risk: LiveRisk,
  form: FormModel,
  root: HTMLElement,
): void {
  root.textContent = "";
  const state = risk.state;
  if (!state.response) {
    root.append(el("p", "risk-empty", state.pending ? "computing…" : "no prediction yet"));
  } else {
    const headline = el("p", "risk-value", formatRisk(manifest, state.response));
    if (state.stale) headline.classList.add("stale");
    root.append(headline);
    for (const w of state.response.warnings ?? []) {
      root.append(el("p", "warning", w));
    }
  }
  if (state.networkError) {
    root.append(el("p", "error", `network: ${state.networkError} (showing last good value)`));
  }
  document.querySelectorAll(".control.has-error").forEach((n) =>
    n.classList.remove("has-error"),
  );
  if (form.fieldError) {
    const bad = document.querySelector(
      `.control[data-feature="${form.fieldError.field}"]`,
    );
    bad?.classList.add("has-error");
  }
}

export function renderWhatIf(panel: WhatIfPanel, root: HTMLElement): void {
  root.textContent = "";
  if (!panel.baseline) {
    root.append(el("p", undefined, "pin a baseline to explore scenarios"));
    return;
  }
  if (panel.latest) {
    const { base_risk, new_risk, delta } = panel.latest;
    root.append(el("p", "whatif-risks",
      `base ${base_risk} → new ${new_risk} (delta ${delta})`));
  }
  if (panel.error) root.append(el("p", "error", panel.error));
  if (panel.history.length) {
    const list = el("ol", "whatif-history");
    for (const probe of panel.history) {
      list.append(el("li", undefined,
        `${JSON.stringify(probe.overrides)} → delta ${probe.response.delta}`));
    }
    root.append(list);
  }
}

export function renderAttributions(view: AttributionView, root: HTMLElement): void {
  root.textContent = "";
  if (view.degraded) {
    root.append(el("p", "warning",
      "explanation unavailable; showing prediction only"));
    return;
  }
  if (!view.response) return;
  const maxAbs = Math.max(...view.bars().map((b) => Math.abs(b.value)), 1e-12);
  for (const bar of view.bars()) {
    const row = el("div", "bar-row");
    row.append(el("span", "bar-label", bar.feature));
    const track = el("div", "bar-track");
    const fill = el("div", bar.positive ? "bar-fill pos" : "bar-fill neg");
    fill.style.width = `${(100 * Math.abs(bar.value)) / maxAbs}%`;
    fill.title = String(bar.value);
    track.append(fill);
    row.append(track);
    row.append(el("span", "bar-value", String(bar.value)));
    root.append(row);
  }
  if (view.hiddenCount() > 0) {
    const more = el("button", "show-all", `show all (${view.hiddenCount()} more)`);
    more.addEventListener("click", () => {
      view.toggleExpanded();
      renderAttributions(view, root);
    });
    root.append(more);
  }
}
