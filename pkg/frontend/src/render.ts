/** HTML renderers for the three console panels. Pure string output. */

import { NODE_HEIGHT, NODE_WIDTH } from "./layout.js";
import type { ViewModel } from "./viewmodel.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const KIND_COLORS: Record<string, string> = {
  source: "#3b82f6",
  sink: "#3b82f6",
  service_call: "#22c55e",
  local_compute: "#eab308",
  shim: "#8888a0",
  opaque: "#ef4444",
};

export function renderGraph(vm: ViewModel): string {
  if (vm.graphError) {
    return `<div class="diagnostic">The workflow graph could not be drawn: ${escapeHtml(vm.graphError)}</div>`;
  }
  if (vm.nodes.length === 0) {
    return `<div class="empty-state">No workflow graph yet. Upload a legacy workflow to begin.</div>`;
  }
  const width = Math.max(...vm.nodes.map((n) => n.x + NODE_WIDTH)) + 24;
  const height = Math.max(...vm.nodes.map((n) => n.y + NODE_HEIGHT)) + 24;
  const at = new Map(vm.nodes.map((n) => [n.id, n]));

  const edges = vm.edges
    .map((edge) => {
      const from = at.get(edge.from);
      const to = at.get(edge.to);
      if (!from || !to) return "";
      const x1 = from.x + NODE_WIDTH;
      const y1 = from.y + NODE_HEIGHT / 2;
      const x2 = to.x;
      const y2 = to.y + NODE_HEIGHT / 2;
      const line = `<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" class="edge" marker-end="url(#arrow)" />`;
      if (!edge.adapter) return line;
      const mx = (x1 + x2) / 2;
      const my = (y1 + y2) / 2;
      const detail = edge.collapsed
        ? `adapter (collapsed step '${edge.collapsed.step.id}')\n${edge.adapter}`
        : `adapter\n${edge.adapter}`;
      return (
        line +
        `<g class="adapter-badge" data-adapter="${escapeHtml(edge.adapter)}">` +
        `<rect x="${mx - 9}" y="${my - 9}" width="18" height="18" rx="4" />` +
        `<text x="${mx}" y="${my + 4}">A</text>` +
        `<title>${escapeHtml(detail)}</title></g>`
      );
    })
    .join("\n");

  const nodes = vm.nodes
    .map((node) => {
      const color = KIND_COLORS[node.kind] ?? "#8888a0";
      const label = escapeHtml(node.id);
      const badge = node.approved ? `<text class="approved" x="${node.x + NODE_WIDTH - 14}" y="${node.y + 16}">✓</text>` : "";
      return (
        `<g class="node" data-node-id="${escapeHtml(node.id)}" data-summary="${escapeHtml(node.summary)}">` +
        `<rect x="${node.x}" y="${node.y}" width="${NODE_WIDTH}" height="${NODE_HEIGHT}" rx="8" style="stroke:${color}" />` +
        `<text x="${node.x + NODE_WIDTH / 2}" y="${node.y + 22}" class="node-label">${label}</text>` +
        `<text x="${node.x + NODE_WIDTH / 2}" y="${node.y + 40}" class="node-kind">${escapeHtml(node.kind)}</text>` +
        badge +
        `</g>`
      );
    })
    .join("\n");

  return (
    `<svg viewBox="0 0 ${width} ${height}" width="100%" height="${height}">` +
    `<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto">` +
    `<path d="M0,0 L8,4 L0,8 z" fill="#8888a0" /></marker></defs>` +
    `${edges}\n${nodes}</svg>` +
    `<aside id="node-detail" class="node-detail" hidden></aside>`
  );
}

function answerControl(vm: ViewModel, item: { question?: { id: string; kind: string; options: string[] | null } }): string {
  const question = item.question;
  if (!question) return "";
  const open = vm.session.open_questions.some((q) => q.id === question.id);
  if (!open) return "";
  if (question.options && question.options.length > 0) {
    const buttons = question.options
      .map(
        (option) =>
          `<button class="answer-option" data-question-id="${escapeHtml(question.id)}" data-option="${escapeHtml(option)}">${escapeHtml(option)}</button>`,
      )
      .join(" ");
    return `<div class="answer-controls">${buttons}</div>`;
  }
  const placeholder =
    question.kind === "endpoint_broken"
      ? "https://example.org/service"
      : question.kind === "missing_input"
        ? "paste a small sample input"
        : "describe what this step should do";
  const field =
    question.kind === "missing_input"
      ? `<textarea class="answer-text" data-question-id="${escapeHtml(question.id)}" placeholder="${placeholder}"></textarea>`
      : `<input class="answer-text" data-question-id="${escapeHtml(question.id)}" placeholder="${placeholder}" />`;
  return (
    `<div class="answer-controls">${field}` +
    `<button class="answer-submit" data-question-id="${escapeHtml(question.id)}" data-question-kind="${escapeHtml(question.kind)}">Send</button></div>`
  );
}

export function renderChat(vm: ViewModel): string {
  const bubbles = vm.chat
    .map((item) => {
      const role = item.kind === "question" ? "engine asks" : item.kind === "answer" ? "curator" : "engine";
      return (
        `<div class="bubble bubble-${item.kind}" data-seq="${item.seq}">` +
        `<span class="who">${role}</span>` +
        `<p>${escapeHtml(item.text)}</p>` +
        answerControl(vm, item) +
        `</div>`
      );
    })
    .join("\n");
  return bubbles || `<div class="empty-state">The conversation starts after an upload.</div>`;
}

export function renderProgress(vm: ViewModel): string {
  const stages = vm.stages
    .map((stage) => `<li class="stage stage-${stage.status}">${escapeHtml(stage.name)}</li>`)
    .join("");
  const executeDisabled = vm.session.pivot_text ? "" : "disabled";
  const report = vm.report
    ? renderReport(vm)
    : `<div class="empty-state">No execution yet. Press Execute once the pivot script exists.</div>`;
  const snakefile = vm.session.snakefile
    ? `<pre class="code">${escapeHtml(vm.session.snakefile)}</pre>`
    : `<div class="empty-state">The Snakemake workflow appears after emission.</div>`;
  const bundle = vm.bundleUrl
    ? `<a class="bundle-link" href="${escapeHtml(vm.bundleUrl)}">Download revival bundle</a>`
    : "";
  const failure = vm.session.failure_cause
    ? `<div class="failure-banner">${escapeHtml(vm.session.failure_cause)}</div>`
    : "";
  return (
    `<ol class="stages">${stages}</ol>${failure}` +
    `<div class="actions"><button id="advance-button">Advance</button>` +
    `<button id="execute-button" ${executeDisabled}>Execute</button>${bundle}</div>` +
    `<h3>Execution Results</h3>${report}` +
    `<h3>Snakemake Workflow</h3>${snakefile}`
  );
}

export function renderReport(vm: ViewModel): string {
  const report = vm.report;
  if (!report) return "";
  if (report.exit_status.kind === "timeout") {
    return `<div class="failure-banner">Execution timed out.</div>`;
  }
  const banner =
    report.exit_status.kind === "ok"
      ? `<div class="ok-banner">Run succeeded in ${report.wall_time_ms} ms (${escapeHtml(report.transport_mode)} transport)</div>`
      : `<div class="failure-banner">Run failed at step ${escapeHtml(report.exit_status.step_id ?? "?")}: ${escapeHtml(report.exit_status.message ?? "")}</div>`;
  const outputs = Object.keys(report.outputs)
    .map((path) => `<li>${escapeHtml(path)}</li>`)
    .join("");
  return (
    banner +
    `<h4>Output preview</h4><pre class="code output-preview">${escapeHtml(report.output_preview)}</pre>` +
    (outputs ? `<h4>Files</h4><ul class="output-files">${outputs}</ul>` : "") +
    `<details><summary>stdout</summary><pre class="code">${escapeHtml(report.stdout)}</pre></details>` +
    `<details><summary>stderr</summary><pre class="code">${escapeHtml(report.stderr)}</pre></details>`
  );
}

export function renderUpload(): string {
  return (
    `<form id="upload-form">` +
    `<input type="file" id="upload-file" accept=".t2flow,.xml" />` +
    `<button type="submit">Upload workflow</button></form>`
  );
}

/** The full three-panel layout (conversation | progress | graph). */
export function renderApp(vm: ViewModel | null): string {
  const title = vm?.session.title ?? "no workflow loaded";
  const state = vm?.session.state ?? "-";
  return `
<header class="topbar">
  <h1>Workflow Revival Console</h1>
  <span class="subtitle">${escapeHtml(title)} &mdash; ${escapeHtml(state)}</span>
</header>
<main class="panels">
  <section class="panel" id="panel-conversation">
    <h2>Communication</h2>
    <div class="section" id="upload-section"><h3>Upload</h3>${renderUpload()}</div>
    <div class="section chat" id="chat-thread">${vm ? renderChat(vm) : ""}</div>
  </section>
  <section class="panel" id="panel-progress">
    <h2>Progress &amp; Target</h2>
    ${vm ? renderProgress(vm) : `<div class="empty-state">Upload a workflow to start.</div>`}
  </section>
  <section class="panel" id="panel-graph">
    <h2>Network</h2>
    <div class="graph" id="graph-canvas">${vm ? renderGraph(vm) : `<div class="empty-state">No workflow graph yet.</div>`}</div>
  </section>
</main>`;
}
