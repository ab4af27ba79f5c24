/* Shared test utilities: fixture loading and a fetch stub that
   needs no real network stack. */

import { vi } from "vitest";
import rawBundle from "./fixtures/bundle.json";
import type {
  Bundle,
  DrilldownPayload,
  EvidenceDocument,
} from "../src/types.js";

/** Deep copy so tests can mutate their bundle freely. */
export function loadBundle(): Bundle {
  return structuredClone(rawBundle) as unknown as Bundle;
}

/** Minimal Response stand-in covering exactly what the client reads. */
export function jsonResponse(body: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: `status ${status}`,
    json: async () => body,
  } as unknown as Response;
}

export type FetchHandler = (
  url: string,
  init?: RequestInit,
) => Response | Promise<Response>;

/** Install a fetch stub; returns the spy for call inspection. */
export function installFetch(handler: FetchHandler) {
  const spy = vi.fn(async (url: string, init?: RequestInit) =>
    handler(url, init),
  );
  vi.stubGlobal("fetch", spy);
  return spy;
}

export function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (reason?: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/**
 * Build the drill-down payload the backend would return for a fact:
 * the fact, its chart, and the documents of question-anchored
 * insights that cite it, with their evidence spans.
 */
export function drilldownFor(bundle: Bundle, factId: string): DrilldownPayload {
  const fact = bundle.facts[factId];
  const chart = bundle.charts[factId];
  if (fact === undefined || chart === undefined) {
    throw new Error(`fixture has no fact/chart ${factId}`);
  }
  const documents: EvidenceDocument[] = [];
  for (const insight of bundle.sections.patient_data_insights) {
    if (!insight.fact_ids.includes(factId) || insight.question_id === null) {
      continue;
    }
    const question = bundle.questions[insight.question_id];
    const span = question?.span ?? null;
    if (span === null) {
      continue;
    }
    const doc = bundle.documents[span.document_id];
    if (doc === undefined || documents.some((d) => d.id === span.document_id)) {
      continue;
    }
    documents.push({
      id: span.document_id,
      kind: doc.kind,
      text: doc.text,
      spans: [span],
    });
  }
  return { fact, chart, evidence_documents: documents };
}
