// Thin client for the service API. Every request goes to a relative /api
// path, so the page's own origin is the only network destination.

import type {
  AttentionFlagDoc,
  FeedbackEnvelope,
  FeedbackVersionDoc,
  MasteryCellDoc,
  MeResponse,
  QuizEnvelope,
  ReviseResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export class ApiClient {
  private token = "";

  constructor(private fetcher: FetchLike = (input, init) => fetch(input, init)) {}

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown,
                           headers: Record<string, string> = {}): Promise<T> {
    if (!path.startsWith("/api/")) {
      throw new Error(`refusing non-API path: ${path}`);
    }
    const init: RequestInit = {
      method,
      headers: {
        authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "content-type": "application/json" } : {}),
        ...headers,
      },
    };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetcher(path, init);
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, payload.detail ?? `HTTP ${resp.status}`);
    }
    return payload as T;
  }

  me(): Promise<MeResponse> {
    return this.request("GET", "/api/me");
  }

  quiz(quizId: string): Promise<QuizEnvelope> {
    return this.request("GET", `/api/quizzes/${encodeURIComponent(quizId)}`);
  }

  submitAnswer(quizId: string, questionId: string, text: string,
               idempotencyKey: string): Promise<{ answer_id: string }> {
    return this.request(
      "POST",
      `/api/quizzes/${encodeURIComponent(quizId)}/answers`,
      { question_id: questionId, text },
      { "Idempotency-Key": idempotencyKey },
    );
  }

  feedback(answerId: string): Promise<FeedbackEnvelope> {
    return this.request("GET", `/api/answers/${encodeURIComponent(answerId)}/feedback`);
  }

  feedbackHistory(answerId: string): Promise<{ versions: FeedbackVersionDoc[] }> {
    return this.request(
      "GET", `/api/answers/${encodeURIComponent(answerId)}/feedback/history`,
    );
  }

  revise(versionId: string, suggestion: string,
         scope: "single" | "quiz_wide"): Promise<ReviseResponse> {
    return this.request(
      "POST",
      `/api/feedback/${encodeURIComponent(versionId)}/revise`,
      { suggestion, scope },
    );
  }

  analytics(groupId: string): Promise<{ cells: MasteryCellDoc[] }> {
    return this.request(
      "GET", `/api/groups/${encodeURIComponent(groupId)}/analytics/overview`,
    );
  }

  attention(groupId: string): Promise<{ flags: AttentionFlagDoc[] }> {
    return this.request(
      "GET", `/api/groups/${encodeURIComponent(groupId)}/attention`,
    );
  }
}

// Poll an answer's feedback until it leaves the pending state.
export async function pollFeedback(
  client: ApiClient,
  answerId: string,
  options: { intervalMs?: number; maxAttempts?: number;
             sleeper?: (ms: number) => Promise<void> } = {},
): Promise<FeedbackEnvelope> {
  const interval = options.intervalMs ?? 500;
  const maxAttempts = options.maxAttempts ?? 120;
  const sleep = options.sleeper ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  let last: FeedbackEnvelope = { status: "pending", feedback: null };
  for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
    last = await client.feedback(answerId);
    if (last.status !== "pending") return last;
    await sleep(interval);
  }
  return last;
}
