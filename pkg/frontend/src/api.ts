// Thin typed client for the annotation service endpoints.

import type { AnswerBody, AnswerResponse, QuestionKind, QuestionPayload, SessionStats } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface AnnotationApi {
  createSession(qtype: QuestionKind, items: number, seed?: number): Promise<string>;
  getQuestion(session: string): Promise<QuestionPayload | null>;
  submitAnswer(session: string, instanceId: string, answer: AnswerBody): Promise<AnswerResponse>;
  getStats(session: string): Promise<SessionStats>;
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && body.detail) detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
  } catch {
    // keep statusText
  }
  return new ApiError(resp.status, detail);
}

export class ApiClient implements AnnotationApi {
  constructor(
    public baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  async createSession(qtype: QuestionKind, items: number, seed?: number): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(seed === undefined ? { qtype, I: items } : { qtype, I: items, seed }),
    });
    if (!resp.ok) throw await parseError(resp);
    const body = await resp.json();
    return body.session_id as string;
  }

  /** The pending question, or null once the queue is exhausted (204). */
  async getQuestion(session: string): Promise<QuestionPayload | null> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/question?session=${encodeURIComponent(session)}`,
    );
    if (resp.status === 204) return null;
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as QuestionPayload;
  }

  async submitAnswer(session: string, instanceId: string, answer: AnswerBody): Promise<AnswerResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session, instance_id: instanceId, answer }),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as AnswerResponse;
  }

  async getStats(session: string): Promise<SessionStats> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/stats?session=${encodeURIComponent(session)}`,
    );
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as SessionStats;
  }
}
