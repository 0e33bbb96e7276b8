/** Typed client for the engine's REST API. Every call unwraps the envelope. */

import type {
  Envelope,
  ExecutionReport,
  IrJson,
  Question,
  SessionView,
  TranscriptEvent,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  const body = (await response.json()) as Envelope<T>;
  if (!body.ok || body.data === undefined) {
    const error = body.error ?? { code: "unknown", message: "unexpected response" };
    throw new ApiError(error.code, error.message, response.status);
  }
  return body.data;
}

export class EngineClient {
  constructor(public baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async health(): Promise<{ status: string; version: string }> {
    return unwrap(await fetch(this.url("/healthz")));
  }

  async createSession(file: Blob, filename: string): Promise<{ id: string; state: string }> {
    const form = new FormData();
    form.append("file", file, filename);
    return unwrap(await fetch(this.url("/sessions"), { method: "POST", body: form }));
  }

  async getSession(id: string): Promise<SessionView> {
    return unwrap(await fetch(this.url(`/sessions/${id}`)));
  }

  async getGraph(id: string): Promise<IrJson> {
    return unwrap(await fetch(this.url(`/sessions/${id}/graph`)));
  }

  async getQuestions(id: string): Promise<Question[]> {
    return unwrap(await fetch(this.url(`/sessions/${id}/questions`)));
  }

  async postAnswer(
    id: string,
    questionId: string,
    payload: unknown,
  ): Promise<{ effect: string; state: string }> {
    return unwrap(
      await fetch(this.url(`/sessions/${id}/answers`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ question_id: questionId, payload }),
      }),
    );
  }

  async advance(
    id: string,
    answers?: Record<string, unknown>,
  ): Promise<{ task_id: string; status: string; state?: string }> {
    return unwrap(
      await fetch(this.url(`/sessions/${id}/advance`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ to_completion: true, answers: answers ?? null }),
      }),
    );
  }

  async execute(
    id: string,
  ): Promise<{ task_id: string; status: string; report?: ExecutionReport; report_index?: number }> {
    return unwrap(await fetch(this.url(`/sessions/${id}/execute`), { method: "POST" }));
  }

  async getTask(taskId: string): Promise<{ id: string; status: string; error?: string }> {
    return unwrap(await fetch(this.url(`/tasks/${taskId}`)));
  }

  async getReport(id: string, index: number): Promise<ExecutionReport> {
    return unwrap(await fetch(this.url(`/sessions/${id}/reports/${index}`)));
  }

  /** One-shot transcript fetch; the live view uses subscribeEvents instead. */
  async getTranscript(id: string): Promise<TranscriptEvent[]> {
    const response = await fetch(this.url(`/sessions/${id}/events`));
    const text = await response.text();
    const events: TranscriptEvent[] = [];
    for (const line of text.split("\n")) {
      if (line.startsWith("data: ") && line !== "data: {}") {
        events.push(JSON.parse(line.slice(6)) as TranscriptEvent);
      }
    }
    return events;
  }

  bundleUrl(id: string): string {
    return this.url(`/sessions/${id}/bundle`);
  }

  async waitForTask(taskId: string, timeoutMs = 30_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const task = await this.getTask(taskId);
      if (task.status !== "running") return;
      await new Promise((resolve) => setTimeout(resolve, 150));
    }
    throw new ApiError("timeout", `task ${taskId} still running`, 0);
  }
}

/**
 * Live transcript subscription. Uses EventSource in the browser and falls
 * back to polling the one-shot endpoint elsewhere (tests, previews).
 */
export function subscribeEvents(
  client: EngineClient,
  sessionId: string,
  onEvent: (event: TranscriptEvent) => void,
): () => void {
  if (typeof EventSource !== "undefined") {
    const source = new EventSource(`${client.baseUrl}/sessions/${sessionId}/events?follow=1`);
    source.onmessage = (message) => {
      if (message.data && message.data !== "{}") onEvent(JSON.parse(message.data));
    };
    source.addEventListener("end", () => source.close());
    source.onerror = () => source.close();
    return () => source.close();
  }
  let seen = 0;
  let stopped = false;
  const poll = async () => {
    while (!stopped) {
      const events = await client.getTranscript(sessionId);
      for (const event of events.slice(seen)) onEvent(event);
      seen = events.length;
      await new Promise((resolve) => setTimeout(resolve, 500));
    }
  };
  void poll();
  return () => {
    stopped = true;
  };
}
