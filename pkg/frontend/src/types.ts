/** Wire types mirroring the engine's JSON payloads. */

export interface Envelope<T> {
  ok: boolean;
  data?: T;
  error?: { code: string; message: string };
}

export interface IrStep {
  id: string;
  kind: "source" | "sink" | "service_call" | "local_compute" | "shim" | "opaque";
  summary: string;
  endpoint?: { protocol: string; base_url: string; operation: string; params: string[] };
  script_text?: string;
  in_ports: string[];
  out_ports: string[];
}

export interface IrEdge {
  from_step: string;
  from_port: string;
  to_step: string;
  to_port: string;
  adapter_script?: string;
}

export interface IrJson {
  title: string;
  origin_digest: string;
  steps: IrStep[];
  edges: IrEdge[];
  inputs: { name: string; sample_value?: string }[];
  outputs: string[];
}

export interface Question {
  id: string;
  kind:
    | "endpoint_broken"
    | "data_format_unknown"
    | "plausibility_check"
    | "missing_input"
    | "opaque_step";
  text: string;
  options: string[] | null;
  linked_step: string | null;
}

export interface CollapseRecord {
  step: IrStep;
  from_step: string;
  to_steps: string[];
}

export interface ExecutionReport {
  exit_status: { kind: "ok" | "runtime_error" | "timeout"; step_id: string | null; message: string | null };
  stdout: string;
  stderr: string;
  outputs: Record<string, string>;
  wall_time_ms: number;
  transport_mode: string;
  output_preview: string;
}

export interface SessionView {
  id: string;
  state: string;
  title: string | null;
  format: string | null;
  open_questions: Question[];
  closed_questions: { question: Question; answer: unknown }[];
  substitutions: {
    step_id: string;
    from_endpoint: { base_url: string; operation: string };
    to_endpoint: { base_url: string; operation: string };
    decided_by: string;
  }[];
  collapse_records: CollapseRecord[];
  reports: number;
  pivot_text: string | null;
  snakefile: string | null;
  failure_cause: string | null;
  bundle_ready: boolean;
  stages: string[];
}

export interface TranscriptEvent {
  seq: number;
  ts: string;
  event: string;
  [key: string]: unknown;
}
