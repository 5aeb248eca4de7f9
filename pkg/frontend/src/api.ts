// Typed client for the game service. The UI keeps no game truth of its
// own: everything rendered comes out of these payloads.

import type {
  AnalyticsReport,
  DecisionPayload,
  MeView,
  RecordView,
  Snapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail || code);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string,
    private token: string,
    private fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      ...(body !== undefined ? { body: JSON.stringify(body) } : {}),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const err = (payload.error ?? {}) as { code?: string; detail?: string };
      throw new ApiError(response.status, err.code ?? "Unknown", err.detail ?? "");
    }
    return payload as T;
  }

  getState(gameId: string): Promise<Snapshot> {
    return this.request("GET", `/games/${gameId}/state`);
  }

  getMe(gameId: string): Promise<MeView> {
    return this.request("GET", `/games/${gameId}/me`);
  }

  submitDecision(gameId: string, payload: DecisionPayload): Promise<{ accepted: boolean }> {
    return this.request("POST", `/games/${gameId}/decisions`, payload);
  }

  getRound(gameId: string, t: number): Promise<RecordView> {
    return this.request("GET", `/games/${gameId}/rounds/${t}`);
  }

  /** Master-only; resolves to null when this token lacks the scope. */
  async getAnalytics(gameId: string): Promise<AnalyticsReport | null> {
    try {
      return await this.request("GET", `/games/${gameId}/analytics`);
    } catch (err) {
      if (err instanceof ApiError && err.status === 403) return null;
      throw err;
    }
  }

  advance(gameId: string, force = false): Promise<{ t: number }> {
    return this.request("POST", `/games/${gameId}/advance`, { force });
  }
}
