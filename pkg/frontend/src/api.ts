/* =========================================
   Backend client

   Thin fetch wrapper around the five HTTP routes the dashboard
   uses.  Reads are GETs; the only writes are the draft-message
   and recompute POSTs.

   Rapid interactions (e.g. clicking several drill-down controls
   in a row) can resolve out of order, so every fetch family
   carries a monotonically increasing request token.  A response
   whose token is no longer current is reported as stale and the
   caller discards it instead of rendering stale data.
   ========================================= */

import type {
  Bundle,
  DraftMessageResponse,
  DrilldownPayload,
  PatientListing,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Wrapper distinguishing a current response from a superseded one. */
export type Tokened<T> = { stale: true } | { stale: false; value: T };

async function parseFailure(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      detail = body.detail;
    }
  } catch {
    // Non-JSON error body; the status line is all we have.
  }
  return new ApiError(detail || `request failed (${response.status})`, response.status);
}

export class ApiClient {
  private readonly tokens = new Map<string, number>();

  constructor(private readonly baseUrl: string = "") {}

  private issueToken(family: string): number {
    const token = (this.tokens.get(family) ?? 0) + 1;
    this.tokens.set(family, token);
    return token;
  }

  private isCurrent(family: string, token: number): boolean {
    return this.tokens.get(family) === token;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw await parseFailure(response);
    }
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseFailure(response);
    }
    return (await response.json()) as T;
  }

  async listPatients(): Promise<PatientListing[]> {
    return this.getJson<PatientListing[]>("/api/patients");
  }

  async getBundle(patientId: string, session?: number): Promise<Bundle> {
    const query = session === undefined ? "" : `?session=${session}`;
    return this.getJson<Bundle>(
      `/api/patients/${encodeURIComponent(patientId)}/bundle${query}`,
    );
  }

  /**
   * Fetch a fact's drill-down payload.  If another drill-down request
   * was issued while this one was in flight, the result is stale.
   */
  async getDrilldown(
    patientId: string,
    factId: string,
  ): Promise<Tokened<DrilldownPayload>> {
    const token = this.issueToken("drilldown");
    const payload = await this.getJson<DrilldownPayload>(
      `/api/patients/${encodeURIComponent(patientId)}/facts/${encodeURIComponent(factId)}/drilldown`,
    );
    if (!this.isCurrent("drilldown", token)) {
      return { stale: true };
    }
    return { stale: false, value: payload };
  }

  async draftMessage(
    patientId: string,
    insightIds: string[],
    activityIds: string[],
  ): Promise<string> {
    const body = { insight_ids: insightIds, activity_ids: activityIds };
    const response = await this.postJson<DraftMessageResponse>(
      `/api/patients/${encodeURIComponent(patientId)}/draft-message`,
      body,
    );
    return response.text;
  }

  async recompute(patientId: string): Promise<void> {
    await this.postJson<{ status: string }>(
      `/api/patients/${encodeURIComponent(patientId)}/recompute`,
      {},
    );
  }
}
