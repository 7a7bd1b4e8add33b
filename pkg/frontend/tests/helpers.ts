import type { Manifest } from "../src/types.js";

export const MANIFEST: Manifest = {
  format_version: "1",
  task: "classification",
  metric: "auroc",
  horizon: null,
  study_seed: 5,
  features: [
    { name: "age", kind: "numeric", range: [20, 80], default: 52.5 },
    { name: "bmi", kind: "numeric", range: [15, 45], default: 27.25 },
    { name: "smoker", kind: "binary", levels: [0, 1], default: 0 },
    {
      name: "activity",
      kind: "categorical",
      levels: ["low", "mid", "high"],
      default: "mid",
    },
  ],
};

export interface RecordedCall {
  url: string;
  payload: unknown;
}

/** fetch stub: returns canned bodies per endpoint and records every payload. */
export function mockFetch(
  responses: Record<string, unknown | (() => unknown)>,
  calls: RecordedCall[] = [],
  status = 200,
) {
  const fn = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = new URL(url, "http://test").pathname;
    const payload = init?.body ? JSON.parse(init.body as string) : null;
    calls.push({ url: path, payload });
    const body = responses[path];
    const resolved = typeof body === "function" ? (body as () => unknown)() : body;
    if (resolved === undefined) {
      return new Response(JSON.stringify({ code: "NotFound" }), { status: 404 });
    }
    return new Response(JSON.stringify(resolved), { status });
  };
  return { fn, calls };
}
