import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, pollFeedback } from "../src/api.js";
import type { FeedbackEnvelope } from "../src/types.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("only ever requests relative /api paths on the page origin", async () => {
    const urls: string[] = [];
    const client = new ApiClient(async (input) => {
      urls.push(input);
      return jsonResponse({ id: "u", role: "student", name: "", groups: [] });
    });
    client.setToken("t");
    await client.me();
    await client.feedback("a-1");
    await client.analytics("g-1");
    for (const url of urls) {
      expect(url.startsWith("/api/")).toBe(true);
      expect(url).not.toMatch(/^https?:/);
    }
  });

  it("sends the bearer token and idempotency key", async () => {
    let captured: RequestInit | undefined;
    const client = new ApiClient(async (_input, init) => {
      captured = init;
      return jsonResponse({ answer_id: "a-1" });
    });
    client.setToken("token-s-kim");
    await client.submitAnswer("quiz-demo", "q-1", "my answer", "key-123");
    const headers = captured?.headers as Record<string, string>;
    expect(headers.authorization).toBe("Bearer token-s-kim");
    expect(headers["Idempotency-Key"]).toBe("key-123");
    expect(JSON.parse(String(captured?.body))).toEqual({
      question_id: "q-1",
      text: "my answer",
    });
  });

  it("raises ApiError with the service detail", async () => {
    const client = new ApiClient(async () =>
      jsonResponse({ detail: "students may only view their own answers" }, 403),
    );
    client.setToken("t");
    await expect(client.feedback("a-2")).rejects.toThrowError(ApiError);
    await expect(client.feedback("a-2")).rejects.toThrowError(
      "students may only view their own answers",
    );
  });

  it("polls until feedback leaves the pending state", async () => {
    const states: FeedbackEnvelope[] = [
      { status: "pending", feedback: null },
      { status: "pending", feedback: null },
      { status: "ready", feedback: null },
    ];
    let calls = 0;
    const client = new ApiClient(async () => jsonResponse(states[calls++]));
    client.setToken("t");
    const result = await pollFeedback(client, "a-1", {
      intervalMs: 0,
      sleeper: async () => {},
    });
    expect(result.status).toBe("ready");
    expect(calls).toBe(3);
  });

  it("stops polling at the attempt cap", async () => {
    let calls = 0;
    const client = new ApiClient(async () => {
      calls++;
      return jsonResponse({ status: "pending", feedback: null });
    });
    client.setToken("t");
    const result = await pollFeedback(client, "a-1", {
      intervalMs: 0,
      maxAttempts: 5,
      sleeper: async () => {},
    });
    expect(result.status).toBe("pending");
    expect(calls).toBe(5);
  });
});
