/**
 * REST client for the rating service. The console holds no authoritative
 * state: everything round-trips through these four endpoints.
 */

export interface SessionSpec {
  task_kind: "dq_rating" | "ab_preference" | "exemplar_curation";
  language?: string;
  seed?: number;
  sample_size?: number;
  categories?: string[];
}

export interface SessionInfo {
  session_id: string;
  size: number;
}

export interface NextItemResponse {
  done: boolean;
  item: Record<string, unknown> | null;
  served: number;
  total: number;
}

export interface SubmitAck {
  item_id: string;
  rated: number;
  total: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface Client {
  createSession(spec: SessionSpec): Promise<SessionInfo>;
  nextItem(sessionId: string): Promise<NextItemResponse>;
  submitRating(
    sessionId: string,
    itemId: string,
    payload: Record<string, unknown>,
  ): Promise<SubmitAck>;
  exportResults(sessionIds: string[]): Promise<Record<string, unknown>>;
}

export function createClient(
  baseUrl: string,
  token: string,
  fetchImpl: FetchLike = fetch,
): Client {
  const base = baseUrl.replace(/\/+$/, "");

  async function call<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetchImpl(`${base}${path}`, {
        ...init,
        headers: {
          "Content-Type": "application/json",
          Authorization: `Bearer ${token}`,
          ...(init?.headers ?? {}),
        },
      });
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = JSON.stringify(JSON.parse(text).detail ?? text);
      } catch {
        // non-JSON error body: report it verbatim
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  return {
    createSession(spec) {
      return call<SessionInfo>("/sessions", {
        method: "POST",
        body: JSON.stringify(spec),
      });
    },
    nextItem(sessionId) {
      return call<NextItemResponse>(`/sessions/${encodeURIComponent(sessionId)}/next`);
    },
    submitRating(sessionId, itemId, payload) {
      return call<SubmitAck>(`/sessions/${encodeURIComponent(sessionId)}/ratings`, {
        method: "POST",
        body: JSON.stringify({ item_id: itemId, payload }),
      });
    },
    exportResults(sessionIds) {
      const query = sessionIds
        .map((sid) => `session_id=${encodeURIComponent(sid)}`)
        .join("&");
      return call<Record<string, unknown>>(`/exports${query ? `?${query}` : ""}`);
    },
  };
}
