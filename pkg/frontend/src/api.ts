// Thin fetch client for the service API. Every mutation the UI performs
// goes through one of these calls; nothing is rendered optimistically.

import {
  AbandonResponseJson,
  AnnotationJson,
  LogResponseJson,
  MetricsWithVersionJson,
  SessionJson,
  StateJson,
  TeachingResponseJson,
  UtteranceResponseJson,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(status === 0 ? detail : `HTTP ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export class ApiClient {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  createSession(taskType: string, seed: number, episodes: number): Promise<SessionJson> {
    return this.request("POST", "/sessions", {
      task_type: taskType,
      seed: seed,
      episodes: episodes,
    });
  }

  getState(sessionId: string): Promise<StateJson> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  sendUtterance(sessionId: string, text: string, requestId?: string): Promise<UtteranceResponseJson> {
    return this.request("POST", `/sessions/${sessionId}/utterance`, {
      text: text,
      request_id: requestId ?? null,
    });
  }

  submitTeaching(
    sessionId: string,
    annotations: AnnotationJson[],
    requestId?: string,
  ): Promise<TeachingResponseJson> {
    return this.request("POST", `/sessions/${sessionId}/teaching`, {
      annotations: annotations,
      request_id: requestId ?? null,
    });
  }

  abandonEpisode(sessionId: string): Promise<AbandonResponseJson> {
    return this.request("POST", `/sessions/${sessionId}/abandon`);
  }

  getMetrics(sessionId: string): Promise<MetricsWithVersionJson> {
    return this.request("GET", `/sessions/${sessionId}/metrics`);
  }

  getLog(sessionId: string): Promise<LogResponseJson> {
    return this.request("GET", `/sessions/${sessionId}/log`);
  }

  eventsUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/events`;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method: method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const payload: unknown = await response.json();
    if (payload && typeof payload === "object") {
      const detail = (payload as { detail?: unknown }).detail;
      if (typeof detail === "string") {
        return detail;
      }
      if (detail !== undefined) {
        return JSON.stringify(detail);
      }
    }
  } catch {
    // Non-JSON error body; fall back to the status text.
  }
  return response.statusText || `status ${response.status}`;
}
