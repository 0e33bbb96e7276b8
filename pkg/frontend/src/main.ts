/** Browser entry: wires the API client, event stream, and renderers. */

import { ApiError, EngineClient, subscribeEvents } from "./api.js";
import { renderApp } from "./render.js";
import { STYLE } from "./style.js";
import type { ExecutionReport, IrJson, TranscriptEvent } from "./types.js";
import { buildViewModel } from "./viewmodel.js";

const client = new EngineClient("");

interface AppState {
  sessionId: string | null;
  events: TranscriptEvent[];
  report: ExecutionReport | null;
  unsubscribe: (() => void) | null;
  pendingAnswers: { questionId: string; payload: unknown }[];
}

const state: AppState = {
  sessionId: null,
  events: [],
  report: null,
  unsubscribe: null,
  pendingAnswers: [],
};

async function refresh(): Promise<void> {
  const root = document.getElementById("app")!;
  if (!state.sessionId) {
    root.innerHTML = renderApp(null);
    return;
  }
  try {
    const session = await client.getSession(state.sessionId);
    let graph: IrJson | null = null;
    try {
      graph = await client.getGraph(state.sessionId);
    } catch {
      graph = null; // not lowered yet
    }
    if (session.reports > 0) {
      state.report = await client.getReport(state.sessionId, session.reports);
    }
    const vm = buildViewModel({
      session,
      graph,
      events: state.events,
      report: state.report,
      baseUrl: client.baseUrl,
    });
    root.innerHTML = renderApp(vm);
  } catch (error) {
    root.innerHTML =
      renderApp(null) +
      `<div class="diagnostic">Cannot reach the engine: ${error instanceof Error ? error.message : String(error)}</div>`;
  }
}

function watchSession(sessionId: string): void {
  state.unsubscribe?.();
  state.events = [];
  state.unsubscribe = subscribeEvents(client, sessionId, (event) => {
    state.events.push(event);
    void refresh();
  });
}

function showRetryBadge(): void {
  let badge = document.getElementById("retry-badge");
  if (!badge) {
    badge = document.createElement("div");
    badge.id = "retry-badge";
    badge.className = "diagnostic";
    badge.style.position = "fixed";
    badge.style.bottom = "12px";
    badge.style.right = "12px";
    document.body.appendChild(badge);
  }
  badge.textContent = `${state.pendingAnswers.length} answer(s) queued; retrying...`;
  badge.hidden = state.pendingAnswers.length === 0;
}

async function flushPendingAnswers(): Promise<void> {
  // answers queued while the engine was unreachable are retried in order
  const queue = [...state.pendingAnswers];
  state.pendingAnswers = [];
  showRetryBadge();
  for (const pending of queue) {
    await submitAnswer(pending.questionId, pending.payload);
  }
}

async function submitAnswer(questionId: string, payload: unknown): Promise<void> {
  if (!state.sessionId) return;
  try {
    await client.postAnswer(state.sessionId, questionId, payload);
    await client.advance(state.sessionId);
  } catch (error) {
    if (error instanceof ApiError) {
      window.alert(`The engine rejected this answer: ${error.message}`);
    } else {
      state.pendingAnswers.push({ questionId, payload });
      showRetryBadge();
      window.setTimeout(() => void flushPendingAnswers(), 2000);
    }
  }
  await refresh();
}

async function handleClick(event: MouseEvent): Promise<void> {
  const target = event.target as HTMLElement;

  const option = target.closest<HTMLElement>(".answer-option");
  if (option && option.dataset.questionId && option.dataset.option) {
    await submitAnswer(option.dataset.questionId, option.dataset.option);
    return;
  }

  const submit = target.closest<HTMLElement>(".answer-submit");
  if (submit && submit.dataset.questionId) {
    const field = document.querySelector<HTMLInputElement | HTMLTextAreaElement>(
      `.answer-text[data-question-id="${submit.dataset.questionId}"]`,
    );
    const text = field?.value.trim() ?? "";
    if (!text) return;
    const payload =
      submit.dataset.questionKind === "missing_input"
        ? { filename: "input.txt", content: text }
        : text;
    await submitAnswer(submit.dataset.questionId, payload);
    return;
  }

  if (target.closest("#advance-button") && state.sessionId) {
    const result = await client.advance(state.sessionId);
    if (result.status === "running") await client.waitForTask(result.task_id);
    await refresh();
    return;
  }

  if (target.closest("#execute-button") && state.sessionId) {
    const result = await client.execute(state.sessionId);
    if (result.report) state.report = result.report;
    await refresh();
    return;
  }

  const node = target.closest<HTMLElement>(".node");
  if (node && node.dataset.summary) {
    const detail = document.getElementById("node-detail");
    if (detail) {
      detail.textContent = `${node.dataset.nodeId}: ${node.dataset.summary}`;
      detail.hidden = false;
    }
  }
}

async function handleUpload(event: Event): Promise<void> {
  event.preventDefault();
  const input = document.getElementById("upload-file") as HTMLInputElement | null;
  const file = input?.files?.[0];
  if (!file) return;
  const created = await client.createSession(file, file.name);
  state.sessionId = created.id;
  state.report = null;
  watchSession(created.id);
  await client.advance(created.id);
  await refresh();
}

function boot(): void {
  const style = document.createElement("style");
  style.textContent = STYLE;
  document.head.appendChild(style);
  const root = document.createElement("div");
  root.id = "app";
  document.body.appendChild(root);
  root.addEventListener("click", (event) => void handleClick(event));
  root.addEventListener("submit", (event) => {
    if ((event.target as HTMLElement).id === "upload-form") void handleUpload(event);
  });
  void refresh();
}

boot();
