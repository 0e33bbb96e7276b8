/** Pure construction of the console's view model from API payloads. */

import { layoutGraph, type PlacedNode } from "./layout.js";
import type {
  CollapseRecord,
  ExecutionReport,
  IrJson,
  Question,
  SessionView,
  TranscriptEvent,
} from "./types.js";

export interface GraphNodeView {
  id: string;
  kind: string;
  summary: string;
  approved: boolean;
  x: number;
  y: number;
}

export interface GraphEdgeView {
  from: string;
  to: string;
  adapter: string | null;
  collapsed: CollapseRecord | null;
}

export interface ChatItem {
  kind: "question" | "answer" | "system";
  text: string;
  question?: Question;
  seq: number;
}

export interface StageView {
  name: string;
  status: "done" | "current" | "pending" | "failed";
}

export interface ViewModel {
  session: SessionView;
  nodes: GraphNodeView[];
  edges: GraphEdgeView[];
  graphError: string | null;
  chat: ChatItem[];
  stages: StageView[];
  report: ExecutionReport | null;
  bundleUrl: string | null;
}

const LINEAR_STAGES = [
  "Uploaded",
  "Parsed",
  "Lowered",
  "Substituted",
  "Synthesized",
  "Validated",
  "Emitted",
  "Packaged",
];

export function buildStages(state: string): StageView[] {
  if (state === "Failed") {
    return LINEAR_STAGES.map((name) => ({ name, status: "failed" as const }));
  }
  const position = LINEAR_STAGES.indexOf(state);
  return LINEAR_STAGES.map((name, index) => ({
    name,
    status: index < position ? "done" : index === position ? "current" : "pending",
  }));
}

function approvedSteps(session: SessionView): Set<string> {
  const approved = new Set<string>();
  for (const closed of session.closed_questions) {
    if (
      closed.question.kind === "plausibility_check" &&
      closed.question.linked_step &&
      String(closed.answer).toLowerCase().startsWith("y")
    ) {
      approved.add(closed.question.linked_step);
    }
  }
  return approved;
}

export function buildGraph(
  ir: IrJson,
  session: SessionView,
): { nodes: GraphNodeView[]; edges: GraphEdgeView[] } {
  const placed = new Map<string, PlacedNode>(layoutGraph(ir).map((node) => [node.id, node]));
  const approved = approvedSteps(session);
  const nodes = ir.steps.map((step) => {
    const at = placed.get(step.id)!;
    return {
      id: step.id,
      kind: step.kind,
      summary: step.summary,
      approved: approved.has(step.id),
      x: at.x,
      y: at.y,
    };
  });
  const collapsedByEdge = new Map<string, CollapseRecord>();
  for (const record of session.collapse_records) {
    for (const to of record.to_steps) {
      collapsedByEdge.set(`${record.from_step}->${to}`, record);
    }
  }
  const edges = ir.edges.map((edge) => ({
    from: edge.from_step,
    to: edge.to_step,
    adapter: edge.adapter_script ?? null,
    collapsed: collapsedByEdge.get(`${edge.from_step}->${edge.to_step}`) ?? null,
  }));
  return { nodes, edges };
}

const SYSTEM_LINES: Record<string, (event: TranscriptEvent) => string | null> = {
  created: (e) => `Workflow '${e.filename}' uploaded.`,
  stage: (e) => `Stage reached: ${e.to}.`,
  substitution: (e) => {
    const record = e.record as { step_id: string; to_endpoint: { base_url: string; operation: string } };
    return `Service for '${record.step_id}' now calls ${record.to_endpoint.base_url}${record.to_endpoint.operation}.`;
  },
  synthesis: () => "Pivot script synthesized.",
  execution: (e) => `Run #${e.report_index} finished: ${e.exit_kind}.`,
  emitted: (e) => `Snakemake workflow emitted (${(e.rules as string[]).length} rules).`,
  packaged: () => "Revival bundle packaged.",
  failed: (e) => `Revival failed: ${e.cause}.`,
  curator_rule: (e) => `Curator supplied a replacement service for '${e.step_id}'.`,
  input_registered: (e) => `Sample input '${e.filename}' registered.`,
  lint: () => "Parser reported pre-revival warnings.",
};

/** Chat thread in strict transcript order; probes and notes stay out. */
export function buildChat(events: TranscriptEvent[]): ChatItem[] {
  const items: ChatItem[] = [];
  for (const event of events) {
    if (event.event === "question_opened") {
      const question = event.question as Question;
      items.push({ kind: "question", text: question.text, question, seq: event.seq });
      continue;
    }
    if (event.event === "question_answered") {
      const payload = event.payload;
      const text = typeof payload === "string" ? payload : "(uploaded file)";
      items.push({ kind: "answer", text, seq: event.seq });
      continue;
    }
    const line = SYSTEM_LINES[event.event]?.(event);
    if (line) items.push({ kind: "system", text: line, seq: event.seq });
  }
  return items;
}

export function buildViewModel(input: {
  session: SessionView;
  graph: IrJson | null;
  events: TranscriptEvent[];
  report: ExecutionReport | null;
  baseUrl?: string;
}): ViewModel {
  const { session, graph, events, report } = input;
  let nodes: GraphNodeView[] = [];
  let edges: GraphEdgeView[] = [];
  let graphError: string | null = null;
  if (graph) {
    try {
      ({ nodes, edges } = buildGraph(graph, session));
    } catch (error) {
      // a malformed or forged graph payload must not take the console down
      graphError = error instanceof Error ? error.message : String(error);
    }
  }
  return {
    session,
    nodes,
    edges,
    graphError,
    chat: buildChat(events),
    stages: buildStages(session.state),
    report,
    bundleUrl: session.bundle_ready
      ? `${input.baseUrl ?? ""}/sessions/${session.id}/bundle`
      : null,
  };
}
