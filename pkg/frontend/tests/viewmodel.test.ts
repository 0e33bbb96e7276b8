import { describe, expect, it } from "vitest";

import { buildChat, buildStages, buildViewModel } from "../src/viewmodel.js";
import type { IrJson, SessionView, TranscriptEvent } from "../src/types.js";

const GRAPH: IrJson = {
  title: "Entrez Gene to KEGG Pathway",
  origin_digest: "0".repeat(64),
  steps: [
    { id: "source", kind: "source", summary: "inputs", in_ports: [], out_ports: ["gene_ids"] },
    {
      id: "read_gene_ids",
      kind: "local_compute",
      summary: "Reads the raw input.",
      in_ports: ["file_text"],
      out_ports: ["gene_ids"],
    },
    {
      id: "convert_to_kegg_ids",
      kind: "service_call",
      summary: "Converts identifiers.",
      in_ports: ["prefixed_ids"],
      out_ports: ["kegg_id_mapping"],
    },
    { id: "sink", kind: "sink", summary: "outputs", in_ports: ["pathways"], out_ports: [] },
  ],
  edges: [
    { from_step: "source", from_port: "gene_ids", to_step: "read_gene_ids", to_port: "file_text" },
    {
      from_step: "read_gene_ids",
      from_port: "gene_ids",
      to_step: "convert_to_kegg_ids",
      to_port: "prefixed_ids",
      adapter_script: 'prefixed_ids = "ncbi-geneid:" + id;',
    },
    {
      from_step: "convert_to_kegg_ids",
      from_port: "kegg_id_mapping",
      to_step: "sink",
      to_port: "pathways",
    },
  ],
  inputs: [{ name: "gene_ids", sample_value: "7124" }],
  outputs: ["pathways"],
};

function sessionView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "s1",
    state: "Validated",
    title: "Entrez Gene to KEGG Pathway",
    format: "t2flow",
    open_questions: [],
    closed_questions: [],
    substitutions: [],
    collapse_records: [
      {
        step: {
          id: "add_ncbi_prefix",
          kind: "shim",
          summary: "Adapts data format between two steps.",
          in_ports: ["id"],
          out_ports: ["prefixed_ids"],
        },
        from_step: "read_gene_ids",
        to_steps: ["convert_to_kegg_ids"],
      },
    ],
    reports: 0,
    pivot_text: null,
    snakefile: null,
    failure_cause: null,
    bundle_ready: false,
    stages: [],
    ...overrides,
  };
}

const EVENTS: TranscriptEvent[] = [
  { seq: 0, ts: "t", event: "created", filename: "kegg.t2flow" },
  { seq: 1, ts: "t", event: "stage", frm: "Uploaded", to: "Parsed" },
  { seq: 2, ts: "t", event: "probe", url: "https://x", status: "ok" },
  {
    seq: 3,
    ts: "t",
    event: "question_opened",
    question: {
      id: "q001",
      kind: "plausibility_check",
      text: "Does it look right?",
      options: ["yes", "no"],
      linked_step: "convert_to_kegg_ids",
    },
  },
  { seq: 4, ts: "t", event: "question_answered", question_id: "q001", payload: "yes" },
];

describe("buildViewModel", () => {
  it("graph node set equals the IR step set", () => {
    const vm = buildViewModel({ session: sessionView(), graph: GRAPH, events: [], report: null });
    expect(new Set(vm.nodes.map((n) => n.id))).toEqual(new Set(GRAPH.steps.map((s) => s.id)));
  });

  it("adapter edges carry badges with collapse records", () => {
    const vm = buildViewModel({ session: sessionView(), graph: GRAPH, events: [], report: null });
    const adapter = vm.edges.find((e) => e.adapter);
    expect(adapter).toBeDefined();
    expect(adapter?.collapsed?.step.id).toBe("add_ncbi_prefix");
  });

  it("approved plausibility answers mark the step", () => {
    const session = sessionView({
      closed_questions: [
        {
          question: {
            id: "q001",
            kind: "plausibility_check",
            text: "?",
            options: ["yes", "no"],
            linked_step: "convert_to_kegg_ids",
          },
          answer: "yes",
        },
      ],
    });
    const vm = buildViewModel({ session, graph: GRAPH, events: [], report: null });
    expect(vm.nodes.find((n) => n.id === "convert_to_kegg_ids")?.approved).toBe(true);
  });

  it("bundle link appears only once packaged", () => {
    const before = buildViewModel({ session: sessionView(), graph: GRAPH, events: [], report: null });
    expect(before.bundleUrl).toBeNull();
    const after = buildViewModel({
      session: sessionView({ state: "Packaged", bundle_ready: true }),
      graph: GRAPH,
      events: [],
      report: null,
    });
    expect(after.bundleUrl).toBe("/sessions/s1/bundle");
  });
});

describe("buildChat", () => {
  it("keeps items in transcript order", () => {
    const chat = buildChat(EVENTS);
    const seqs = chat.map((item) => item.seq);
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
  });

  it("renders questions and answers as distinct kinds", () => {
    const chat = buildChat(EVENTS);
    expect(chat.map((c) => c.kind)).toEqual(["system", "system", "question", "answer"]);
    expect(chat[2].question?.id).toBe("q001");
  });
});

describe("buildStages", () => {
  it("marks done, current, and pending", () => {
    const stages = buildStages("Substituted");
    expect(stages.find((s) => s.name === "Uploaded")?.status).toBe("done");
    expect(stages.find((s) => s.name === "Substituted")?.status).toBe("current");
    expect(stages.find((s) => s.name === "Packaged")?.status).toBe("pending");
  });

  it("failure marks every stage failed", () => {
    expect(buildStages("Failed").every((s) => s.status === "failed")).toBe(true);
  });
});
