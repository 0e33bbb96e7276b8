"""Engine-agnostic DAG intermediate representation of a workflow.

The IR is what substitution, synthesis, and emission operate on: a set of
classified steps joined by port-to-port edges, with synthetic source/sink
steps bracketing the graph. Shim steps (format adapters with no scientific
content) can be detected and folded into edge annotations so the revived
workflow keeps only functional steps, without changing reachability.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, replace
from enum import Enum

from ._util import snake_case, unique_name
from .errors import CyclicWorkflow, SchemaViolation
from .legacy import (
    ActivityKind,
    LegacyWorkflow,
    ProcessorPortRef,
    WorkflowInputRef,
    WorkflowOutputRef,
)
from .services import ServiceEndpoint

SOURCE_ID = "source"
SINK_ID = "sink"

_IDENT = re.compile(r"^[a-z][a-z0-9_]*$|^n[0-9][a-z0-9_]*$")


class StepKind(str, Enum):
    SOURCE = "source"
    SINK = "sink"
    SERVICE_CALL = "service_call"
    LOCAL_COMPUTE = "local_compute"
    SHIM = "shim"
    OPAQUE = "opaque"


@dataclass(frozen=True)
class Step:
    id: str
    kind: StepKind
    summary: str
    endpoint: ServiceEndpoint | None = None
    script_text: str | None = None
    in_ports: tuple[str, ...] = ()
    out_ports: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id or not _IDENT.match(self.id):
            raise ValueError(f"step id must be snake_case and nonempty: {self.id!r}")
        if self.kind is StepKind.SERVICE_CALL and self.endpoint is None:
            raise ValueError(f"service step '{self.id}' has no endpoint")
        if self.kind is StepKind.SHIM and (len(self.in_ports) != 1 or len(self.out_ports) != 1):
            raise ValueError(f"shim step '{self.id}' must have exactly one in and one out port")

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "kind": self.kind.value,
            "summary": self.summary,
            "in_ports": list(self.in_ports),
            "out_ports": list(self.out_ports),
        }
        if self.endpoint is not None:
            d["endpoint"] = self.endpoint.to_dict()
        if self.script_text is not None:
            d["script_text"] = self.script_text
        return d


@dataclass(frozen=True)
class Edge:
    from_step: str
    from_port: str
    to_step: str
    to_port: str
    adapter_script: str | None = None

    def to_dict(self) -> dict:
        d: dict = {
            "from_step": self.from_step,
            "from_port": self.from_port,
            "to_step": self.to_step,
            "to_port": self.to_port,
        }
        if self.adapter_script is not None:
            d["adapter_script"] = self.adapter_script
        return d


@dataclass(frozen=True)
class IRInput:
    name: str
    sample_value: str | None = None

    def to_dict(self) -> dict:
        d: dict = {"name": self.name}
        if self.sample_value is not None:
            d["sample_value"] = self.sample_value
        return d


@dataclass(frozen=True)
class CollapseRecord:
    """A shim step removed by collapse, kept for round-trip display."""

    step: Step
    from_step: str
    to_steps: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "step": self.step.to_dict(),
            "from_step": self.from_step,
            "to_steps": list(self.to_steps),
        }


@dataclass(frozen=True)
class WorkflowIR:
    title: str
    origin_digest: str
    steps: tuple[Step, ...]
    edges: tuple[Edge, ...]
    inputs: tuple[IRInput, ...]
    outputs: tuple[str, ...]

    def __post_init__(self) -> None:
        ids = [s.id for s in self.steps]
        if len(ids) != len(set(ids)):
            raise ValueError("step ids must be unique")
        ports = {s.id: (set(s.in_ports), set(s.out_ports)) for s in self.steps}
        for e in self.edges:
            if e.from_step not in ports:
                raise ValueError(f"edge from unknown step '{e.from_step}'")
            if e.to_step not in ports:
                raise ValueError(f"edge to unknown step '{e.to_step}'")
            if e.from_port not in ports[e.from_step][1]:
                raise ValueError(f"edge from undeclared port '{e.from_step}.{e.from_port}'")
            if e.to_port not in ports[e.to_step][0]:
                raise ValueError(f"edge to undeclared port '{e.to_step}.{e.to_port}'")
        topo_order(self)  # raises CyclicWorkflow on cycles

    def step(self, step_id: str) -> Step:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)

    def functional_steps(self) -> list[Step]:
        """Steps that carry out work: everything but source and sink."""
        order = topo_order(self)
        by_id = {s.id: s for s in self.steps}
        return [by_id[i] for i in order if by_id[i].kind not in (StepKind.SOURCE, StepKind.SINK)]

    def in_edges(self, step_id: str) -> list[Edge]:
        return [e for e in self.edges if e.to_step == step_id]

    def out_edges(self, step_id: str) -> list[Edge]:
        return [e for e in self.edges if e.from_step == step_id]

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "origin_digest": self.origin_digest,
            "steps": [s.to_dict() for s in self.steps],
            "edges": [e.to_dict() for e in self.edges],
            "inputs": [i.to_dict() for i in self.inputs],
            "outputs": list(self.outputs),
        }


# --------------------------------------------------------------------------
# Lowering


_KIND_MAP = {
    ActivityKind.SOAP_CALL: StepKind.SERVICE_CALL,
    ActivityKind.REST_CALL: StepKind.SERVICE_CALL,
    ActivityKind.LOCAL_SCRIPT: StepKind.LOCAL_COMPUTE,
    ActivityKind.STRING_CONSTANT: StepKind.LOCAL_COMPUTE,
    ActivityKind.OPAQUE: StepKind.OPAQUE,
}


def _default_summary(step_id: str, kind: StepKind) -> str:
    label = {
        StepKind.SOURCE: "Provides the workflow's input values.",
        StepKind.SINK: "Collects the workflow's final outputs.",
        StepKind.SERVICE_CALL: f"Calls an online service in step '{step_id}'.",
        StepKind.LOCAL_COMPUTE: f"Runs a local computation in step '{step_id}'.",
        StepKind.SHIM: "Adapts data format between two steps.",
        StepKind.OPAQUE: f"Step '{step_id}' could not be classified automatically.",
    }
    return label[kind]


def lower(wf: LegacyWorkflow) -> WorkflowIR:
    """Lower a parsed legacy workflow to the classified DAG IR.

    One step per processor plus a synthetic source (when the workflow has
    inputs) and sink (when it has outputs). Raises CyclicWorkflow if the
    datalinks form a cycle; the cycle is reported as a step-id sequence.
    """
    taken: set[str] = set()
    id_of: dict[str, str] = {}
    steps: list[Step] = []

    has_source = bool(wf.workflow_inputs)
    has_sink = bool(wf.workflow_outputs)
    if has_source:
        taken.add(SOURCE_ID)
    if has_sink:
        taken.add(SINK_ID)

    for proc in wf.processors:
        sid = unique_name(snake_case(proc.name), taken)
        taken.add(sid)
        id_of[proc.name] = sid
        kind = _KIND_MAP[proc.activity_kind]
        steps.append(
            Step(
                id=sid,
                kind=kind,
                summary=_default_summary(sid, kind),
                endpoint=proc.endpoint,
                script_text=proc.script_text,
                in_ports=tuple(p.name for p in proc.input_ports),
                out_ports=tuple(p.name for p in proc.output_ports),
            )
        )

    if has_source:
        steps.insert(
            0,
            Step(
                id=SOURCE_ID,
                kind=StepKind.SOURCE,
                summary=_default_summary(SOURCE_ID, StepKind.SOURCE),
                out_ports=tuple(wf.workflow_inputs),
            ),
        )
    if has_sink:
        steps.append(
            Step(
                id=SINK_ID,
                kind=StepKind.SINK,
                summary=_default_summary(SINK_ID, StepKind.SINK),
                in_ports=tuple(wf.workflow_outputs),
            )
        )

    edges: list[Edge] = []
    for link in wf.datalinks:
        if isinstance(link.source, WorkflowInputRef):
            from_step, from_port = SOURCE_ID, link.source.name
        else:
            assert isinstance(link.source, ProcessorPortRef)
            from_step, from_port = id_of[link.source.processor], link.source.port
        if isinstance(link.sink, WorkflowOutputRef):
            to_step, to_port = SINK_ID, link.sink.name
        else:
            assert isinstance(link.sink, ProcessorPortRef)
            to_step, to_port = id_of[link.sink.processor], link.sink.port
        edges.append(Edge(from_step, from_port, to_step, to_port))

    inputs = tuple(
        IRInput(name, wf.raw_annotations.get(f"example:{name}")) for name in wf.workflow_inputs
    )
    return WorkflowIR(
        title=wf.title,
        origin_digest=wf.source_digest,
        steps=tuple(steps),
        edges=tuple(edges),
        inputs=inputs,
        outputs=tuple(wf.workflow_outputs),
    )


# --------------------------------------------------------------------------
# Shim handling

_NETWORK_TOKENS = ("http", "url", "request")
_SIDE_EFFECT_TOKENS = ("open(", "file", "read", "write", "import ", "exec", "system(", "socket")
_CONTROL_FLOW = re.compile(r"\b(for|while|if|else|switch)\b")
_STRING_OP = re.compile(
    r"""(\.split\(|\.join\(|\.strip\(|\.trim\(|\.replace\(|\.concat\(|"[^"\n]*"\s*\+|\+\s*"[^"\n]*")"""
)


def is_shim_script(text: str | None) -> bool:
    """Conservative syntactic test for pure string-adapter scripts.

    Only straight-line string manipulation qualifies: any hint of network
    access, I/O, or control flow keeps the step as a functional
    LocalCompute so a wrong collapse cannot alter semantics.
    """
    if not text or not text.strip():
        return False
    low = text.lower()
    if any(tok in low for tok in _NETWORK_TOKENS):
        return False
    if any(tok in low for tok in _SIDE_EFFECT_TOKENS):
        return False
    if _CONTROL_FLOW.search(low):
        return False
    return bool(_STRING_OP.search(text))


def detect_shims(ir: WorkflowIR) -> WorkflowIR:
    """Reclassify single-in/single-out string-adapter steps as shims."""
    new_steps = []
    for s in ir.steps:
        if (
            s.kind is StepKind.LOCAL_COMPUTE
            and len(s.in_ports) == 1
            and len(s.out_ports) == 1
            and is_shim_script(s.script_text)
        ):
            s = replace(s, kind=StepKind.SHIM, summary=_default_summary(s.id, StepKind.SHIM))
        new_steps.append(s)
    return replace(ir, steps=tuple(new_steps))


def compose_adapters(*parts: str | None) -> str | None:
    chunks = [p for p in parts if p and p.strip()]
    return "\n".join(chunks) if chunks else None


def collapse_shims(ir: WorkflowIR) -> tuple[WorkflowIR, list[CollapseRecord]]:
    """Fold maximal shim chains into `adapter_script` edge annotations.

    Shims with more than one incoming edge (merges) are left in place:
    collapsing them could reorder data. Everything else about the graph is
    unchanged, so reachability between functional steps is preserved.
    """
    steps = list(ir.steps)
    edges = list(ir.edges)
    records: list[CollapseRecord] = []

    for sid in topo_order(ir):
        step = next((s for s in steps if s.id == sid), None)
        if step is None or step.kind is not StepKind.SHIM:
            continue
        incoming = [e for e in edges if e.to_step == sid]
        outgoing = [e for e in edges if e.from_step == sid]
        if len(incoming) != 1 or not outgoing:
            continue
        upstream = incoming[0]
        replacements = [
            Edge(
                from_step=upstream.from_step,
                from_port=upstream.from_port,
                to_step=out.to_step,
                to_port=out.to_port,
                adapter_script=compose_adapters(
                    upstream.adapter_script, step.script_text, out.adapter_script
                ),
            )
            for out in outgoing
        ]
        dropped = {id(upstream), *(id(o) for o in outgoing)}
        edges = [e for e in edges if id(e) not in dropped] + replacements
        steps = [s for s in steps if s.id != sid]
        records.append(
            CollapseRecord(step=step, from_step=upstream.from_step, to_steps=tuple(e.to_step for e in outgoing))
        )

    collapsed = WorkflowIR(
        title=ir.title,
        origin_digest=ir.origin_digest,
        steps=tuple(steps),
        edges=tuple(edges),
        inputs=ir.inputs,
        outputs=ir.outputs,
    )
    return collapsed, records


# --------------------------------------------------------------------------
# Ordering


def topo_order(ir: WorkflowIR) -> list[str]:
    """Deterministic topological order; ties broken by lexicographic id."""
    ids = [s.id for s in ir.steps]
    indegree = {i: 0 for i in ids}
    successors: dict[str, list[str]] = {i: [] for i in ids}
    for e in ir.edges:
        successors[e.from_step].append(e.to_step)
        indegree[e.to_step] += 1

    heap = [i for i in ids if indegree[i] == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        node = heapq.heappop(heap)
        order.append(node)
        for succ in successors[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(heap, succ)

    if len(order) != len(ids):
        raise CyclicWorkflow(_find_cycle(ids, successors, set(order)))
    return order


def _find_cycle(ids: list[str], successors: dict[str, list[str]], done: set[str]) -> list[str]:
    remaining = [i for i in ids if i not in done]
    start = remaining[0]
    path, seen = [start], {start}
    node = start
    while True:
        node = next(s for s in successors[node] if s not in done)
        if node in seen:
            return path[path.index(node):] + [node]
        path.append(node)
        seen.add(node)


# --------------------------------------------------------------------------
# JSON interchange


def ir_to_json(ir: WorkflowIR) -> str:
    return json.dumps(ir.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)


def _expect(obj: dict, key: str, types, path: str):
    if key not in obj:
        raise SchemaViolation(f"{path}.{key}", "missing")
    value = obj[key]
    if not isinstance(value, types):
        raise SchemaViolation(f"{path}.{key}", f"expected {types}")
    return value


def ir_from_json(text: str) -> WorkflowIR:
    """Parse canonical IR JSON, reporting the JSON-path of any violation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation("$", "expected an object")

    title = _expect(doc, "title", str, "$")
    digest = _expect(doc, "origin_digest", str, "$")
    steps_raw = _expect(doc, "steps", list, "$")
    edges_raw = _expect(doc, "edges", list, "$")
    inputs_raw = _expect(doc, "inputs", list, "$")
    outputs_raw = _expect(doc, "outputs", list, "$")

    steps = []
    for i, s in enumerate(steps_raw):
        path = f"$.steps[{i}]"
        if not isinstance(s, dict):
            raise SchemaViolation(path, "expected an object")
        kind_text = _expect(s, "kind", str, path)
        try:
            kind = StepKind(kind_text)
        except ValueError as exc:
            raise SchemaViolation(f"{path}.kind", f"unknown kind {kind_text!r}") from exc
        endpoint = None
        if "endpoint" in s and s["endpoint"] is not None:
            ep = _expect(s, "endpoint", dict, path)
            try:
                endpoint = ServiceEndpoint.from_dict(ep)
            except (KeyError, ValueError) as exc:
                raise SchemaViolation(f"{path}.endpoint", str(exc)) from exc
        try:
            steps.append(
                Step(
                    id=_expect(s, "id", str, path),
                    kind=kind,
                    summary=_expect(s, "summary", str, path),
                    endpoint=endpoint,
                    script_text=s.get("script_text"),
                    in_ports=tuple(_expect(s, "in_ports", list, path)),
                    out_ports=tuple(_expect(s, "out_ports", list, path)),
                )
            )
        except ValueError as exc:
            raise SchemaViolation(path, str(exc)) from exc

    edges = []
    for i, e in enumerate(edges_raw):
        path = f"$.edges[{i}]"
        if not isinstance(e, dict):
            raise SchemaViolation(path, "expected an object")
        edges.append(
            Edge(
                from_step=_expect(e, "from_step", str, path),
                from_port=_expect(e, "from_port", str, path),
                to_step=_expect(e, "to_step", str, path),
                to_port=_expect(e, "to_port", str, path),
                adapter_script=e.get("adapter_script"),
            )
        )

    inputs = []
    for i, inp in enumerate(inputs_raw):
        path = f"$.inputs[{i}]"
        if not isinstance(inp, dict):
            raise SchemaViolation(path, "expected an object")
        inputs.append(IRInput(_expect(inp, "name", str, path), inp.get("sample_value")))

    try:
        return WorkflowIR(
            title=title,
            origin_digest=digest,
            steps=tuple(steps),
            edges=tuple(edges),
            inputs=tuple(inputs),
            outputs=tuple(outputs_raw),
        )
    except ValueError as exc:
        raise SchemaViolation("$", str(exc)) from exc
