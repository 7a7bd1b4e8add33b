/** Bootstrap: fetch /schema (with a retry state, never a blank page), build
 * the form, and wire the live risk, what-if, and attribution panels. */

import { ApiClient } from "./api.js";
import { AttributionView } from "./attribution.js";
import {
  renderAttributions,
  renderForm,
  renderRisk,
  renderWhatIf,
} from "./dom.js";
import { FormModel } from "./form.js";
import { LiveRisk } from "./risk.js";
import type { Manifest } from "./types.js";
import { WhatIfPanel } from "./whatif.js";

function mount(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

export async function start(baseUrl: string): Promise<void> {
  const api = new ApiClient(baseUrl);
  const formRoot = mount("form");
  const riskRoot = mount("risk");
  const whatifRoot = mount("whatif");
  const attribRoot = mount("attributions");
  const status = mount("status");

  let manifest: Manifest;
  try {
    manifest = await api.schema();
  } catch (err) {
    status.textContent = `could not load the model schema (${(err as Error).message})`;
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.addEventListener("click", () => void start(baseUrl));
    status.append(retry);
    return;
  }
  status.textContent = `task: ${manifest.task} (${manifest.metric})`;

  const form = FormModel.fromManifest(manifest);
  if (!form) {
    formRoot.textContent = "no model loaded";
    return;
  }

  const risk = new LiveRisk(api, form);
  const whatif = new WhatIfPanel(api);
  const attributions = new AttributionView(api);

  risk.onUpdate(() => renderRisk(manifest, risk, form, riskRoot));

  const onInput = () => {
    risk.valuesChanged();
    if (whatif.baseline) {
      for (const [name, value] of Object.entries(form.payload())) {
        whatif.setOverride(name, value);
      }
      void whatif.refresh().then(() => renderWhatIf(whatif, whatifRoot));
    }
  };
  renderForm(manifest, form, formRoot, onInput);

  mount("pin-baseline").addEventListener("click", () => {
    whatif.pinBaseline(form.payload());
    renderWhatIf(whatif, whatifRoot);
  });
  mount("explain").addEventListener("click", () => {
    void attributions
      .refresh(form.payload())
      .then(() => renderAttributions(attributions, attribRoot));
  });

  await risk.refresh();
  renderWhatIf(whatif, whatifRoot);
}
