"""Faithful parsing of Taverna-era workflow documents (t2flow, SCUFL).

The parser extracts only what downstream stages consume: processors with
their ports and activities, datalinks, and workflow inputs/outputs.
Everything else is preserved verbatim in `raw_annotations`. Unrecognized
activity classes become Opaque processors rather than parse failures.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum

from ._util import sha256_hex
from .errors import DanglingLink, MalformedXml, UnsupportedFormat
from .services import Protocol, ServiceEndpoint


class WorkflowFormat(str, Enum):
    T2FLOW = "t2flow"
    SCUFL = "scufl"
    UNKNOWN = "unknown"


class ActivityKind(str, Enum):
    SOAP_CALL = "soap_call"
    REST_CALL = "rest_call"
    LOCAL_SCRIPT = "local_script"
    STRING_CONSTANT = "string_constant"
    OPAQUE = "opaque"


@dataclass(frozen=True)
class Port:
    name: str
    depth: int = 0

    def to_dict(self) -> dict:
        return {"name": self.name, "depth": self.depth}


@dataclass(frozen=True)
class Processor:
    """One legacy workflow node: a service call, script, or constant.

    For STRING_CONSTANT activities the constant value is carried in
    `script_text`.
    """

    name: str
    activity_kind: ActivityKind
    endpoint: ServiceEndpoint | None = None
    script_text: str | None = None
    input_ports: tuple[Port, ...] = ()
    output_ports: tuple[Port, ...] = ()

    def __post_init__(self) -> None:
        if self.activity_kind in (ActivityKind.SOAP_CALL, ActivityKind.REST_CALL) and self.endpoint is None:
            raise ValueError(f"processor '{self.name}' is a service call without an endpoint")
        if self.activity_kind is ActivityKind.LOCAL_SCRIPT and not self.script_text:
            raise ValueError(f"processor '{self.name}' is a script without script text")
        for ports in (self.input_ports, self.output_ports):
            names = [p.name for p in ports]
            if len(names) != len(set(names)):
                raise ValueError(f"processor '{self.name}' declares duplicate port names")

    def to_dict(self) -> dict:
        d: dict = {
            "name": self.name,
            "activity_kind": self.activity_kind.value,
            "input_ports": [p.to_dict() for p in self.input_ports],
            "output_ports": [p.to_dict() for p in self.output_ports],
        }
        if self.endpoint is not None:
            d["endpoint"] = self.endpoint.to_dict()
        if self.script_text is not None:
            d["script_text"] = self.script_text
        return d


@dataclass(frozen=True)
class WorkflowInputRef:
    name: str

    def to_dict(self) -> dict:
        return {"kind": "workflow_input", "name": self.name}


@dataclass(frozen=True)
class WorkflowOutputRef:
    name: str

    def to_dict(self) -> dict:
        return {"kind": "workflow_output", "name": self.name}


@dataclass(frozen=True)
class ProcessorPortRef:
    processor: str
    port: str

    def to_dict(self) -> dict:
        return {"kind": "processor_port", "processor": self.processor, "port": self.port}


LinkEnd = WorkflowInputRef | WorkflowOutputRef | ProcessorPortRef


@dataclass(frozen=True)
class DataLink:
    source: LinkEnd
    sink: LinkEnd

    def __post_init__(self) -> None:
        if isinstance(self.source, WorkflowOutputRef):
            raise ValueError("datalink source cannot be a workflow output")
        if isinstance(self.sink, WorkflowInputRef):
            raise ValueError("datalink sink cannot be a workflow input")

    def to_dict(self) -> dict:
        return {"source": self.source.to_dict(), "sink": self.sink.to_dict()}


@dataclass(frozen=True)
class LegacyWorkflow:
    format: WorkflowFormat
    title: str
    source_digest: str
    processors: tuple[Processor, ...]
    datalinks: tuple[DataLink, ...]
    workflow_inputs: tuple[str, ...]
    workflow_outputs: tuple[str, ...]
    raw_annotations: dict[str, str] = field(default_factory=dict)

    def processor(self, name: str) -> Processor:
        for p in self.processors:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "format": self.format.value,
            "title": self.title,
            "source_digest": self.source_digest,
            "processors": [p.to_dict() for p in self.processors],
            "datalinks": [l.to_dict() for l in self.datalinks],
            "workflow_inputs": list(self.workflow_inputs),
            "workflow_outputs": list(self.workflow_outputs),
            "raw_annotations": dict(sorted(self.raw_annotations.items())),
        }


@dataclass(frozen=True)
class LintFinding:
    severity: str
    message: str
    location: str

    def to_dict(self) -> dict:
        return {"severity": self.severity, "message": self.message, "location": self.location}


# --------------------------------------------------------------------------
# XML helpers (namespace-insensitive)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1].lower()


def _children(el: ET.Element, name: str) -> list[ET.Element]:
    return [c for c in el if _local(c.tag) == name]


def _child(el: ET.Element, name: str) -> ET.Element | None:
    found = _children(el, name)
    return found[0] if found else None


def _descendant_text(el: ET.Element, name: str) -> str | None:
    for node in el.iter():
        if _local(node.tag) == name:
            return node.text or ""
    return None


def _text(el: ET.Element | None) -> str:
    return (el.text or "") if el is not None else ""


# --------------------------------------------------------------------------
# Format detection


def detect_format(raw: bytes) -> WorkflowFormat:
    """Identify the document format from its root element shape."""
    try:
        root = ET.fromstring(raw)
    except ET.ParseError:
        return WorkflowFormat.UNKNOWN
    name = _local(root.tag)
    if name == "workflow" and _child(root, "dataflow") is not None:
        return WorkflowFormat.T2FLOW
    if name == "scufl":
        return WorkflowFormat.SCUFL
    return WorkflowFormat.UNKNOWN


# --------------------------------------------------------------------------
# t2flow parsing


@dataclass
class _ParsedFlow:
    flow_id: str
    name: str
    inputs: list[tuple[str, int]]
    outputs: list[str]
    processors: list[Processor]
    links: list[DataLink]
    nested_refs: dict[str, str]  # processor name -> referenced dataflow id
    annotations: dict[str, str]


def _parse_ports(container: ET.Element | None) -> list[tuple[str, int]]:
    ports: list[tuple[str, int]] = []
    if container is None:
        return ports
    for port in _children(container, "port"):
        name = _text(_child(port, "name")).strip()
        depth_text = _text(_child(port, "depth")).strip()
        depth = int(depth_text) if depth_text.isdigit() else 0
        if name:
            ports.append((name, depth))
    return ports


def _classify_activity(activity: ET.Element) -> tuple[ActivityKind, ServiceEndpoint | None, str | None, str | None]:
    """Return (kind, endpoint, script_text, nested dataflow ref)."""
    cls = _text(_child(activity, "class")).strip().lower()
    config = _child(activity, "configbean")
    if "dataflow" in cls:
        ref = None
        if config is not None:
            for node in config.iter():
                ref = node.get("ref") or ref
        return ActivityKind.OPAQUE, None, None, ref
    if "beanshell" in cls or "localworker" in cls:
        script = _descendant_text(config, "script") if config is not None else None
        if script is not None:
            return ActivityKind.LOCAL_SCRIPT, None, script, None
    if "stringconstant" in cls:
        value = _descendant_text(config, "value") if config is not None else None
        return ActivityKind.STRING_CONSTANT, None, value or "", None
    if "wsdl" in cls:
        wsdl = (_descendant_text(config, "wsdl") or "").strip() if config is not None else ""
        operation = (_descendant_text(config, "operation") or "").strip() if config is not None else ""
        if wsdl:
            return ActivityKind.SOAP_CALL, ServiceEndpoint(Protocol.SOAP, wsdl, operation), None, None
    if "rest" in cls:
        template = ""
        if config is not None:
            template = (
                _descendant_text(config, "urlsignature") or _descendant_text(config, "template") or ""
            ).strip()
        if template:
            m = re.match(r"(https?://[^/]+)(/.*)?$", template)
            if m:
                base, path = m.group(1), m.group(2) or "/"
                params = tuple(re.findall(r"\{(\w+)\}", path))
                return ActivityKind.REST_CALL, ServiceEndpoint(Protocol.REST, base, path, params), None, None
    return ActivityKind.OPAQUE, None, None, None


def _parse_link_end(el: ET.Element, *, is_sink: bool) -> LinkEnd:
    proc = _text(_child(el, "processor")).strip()
    port = _text(_child(el, "port")).strip()
    if proc:
        return ProcessorPortRef(proc, port)
    return WorkflowOutputRef(port) if is_sink else WorkflowInputRef(port)


def _parse_dataflow(flow: ET.Element, annotations: dict[str, str]) -> _ParsedFlow:
    name = _text(_child(flow, "name")).strip() or "untitled workflow"
    inputs = _parse_ports(_child(flow, "inputports"))
    outputs = [n for n, _ in _parse_ports(_child(flow, "outputports"))]

    processors: list[Processor] = []
    nested_refs: dict[str, str] = {}
    procs_el = _child(flow, "processors")
    for proc in _children(procs_el, "processor") if procs_el is not None else []:
        pname = _text(_child(proc, "name")).strip()
        in_ports = tuple(Port(n, d) for n, d in _parse_ports(_child(proc, "inputports")))
        out_ports = tuple(Port(n, d) for n, d in _parse_ports(_child(proc, "outputports")))
        activities = _child(proc, "activities")
        activity = _child(activities, "activity") if activities is not None else None
        kind, endpoint, script, nested = (ActivityKind.OPAQUE, None, None, None)
        if activity is not None:
            kind, endpoint, script, nested = _classify_activity(activity)
        if nested is not None:
            nested_refs[pname] = nested
        if kind is ActivityKind.OPAQUE and nested is None:
            raw = ET.tostring(activity, encoding="unicode") if activity is not None else "<missing activity/>"
            annotations[f"opaque_activity:{pname}"] = raw
        processors.append(
            Processor(
                name=pname,
                activity_kind=kind,
                endpoint=endpoint,
                script_text=script,
                input_ports=in_ports,
                output_ports=out_ports,
            )
        )

    links: list[DataLink] = []
    links_el = _child(flow, "datalinks")
    for link in _children(links_el, "datalink") if links_el is not None else []:
        sink_el, source_el = _child(link, "sink"), _child(link, "source")
        if sink_el is None or source_el is None:
            continue
        links.append(
            DataLink(
                source=_parse_link_end(source_el, is_sink=False),
                sink=_parse_link_end(sink_el, is_sink=True),
            )
        )

    ann_el = _child(flow, "annotations")
    if ann_el is not None:
        for ann in _children(ann_el, "annotation"):
            cls = (ann.get("class") or "").lower()
            port = _text(_child(ann, "port")).strip()
            value = _text(_child(ann, "value")).strip() or (ann.text or "").strip()
            if "example" in cls and port:
                annotations[f"example:{port}"] = value
            elif port or value:
                annotations[f"annotation:{cls or 'note'}:{port or len(annotations)}"] = value

    return _ParsedFlow(
        flow_id=flow.get("id") or name,
        name=name,
        inputs=inputs,
        outputs=outputs,
        processors=processors,
        links=links,
        nested_refs=nested_refs,
        annotations=annotations,
    )


def _flatten(
    flow: _ParsedFlow,
    flows_by_id: dict[str, _ParsedFlow],
    visiting: frozenset[str],
) -> tuple[list[Processor], list[DataLink]]:
    """Inline nested dataflows, prefixing child processor names `parent.child`."""
    if flow.flow_id in visiting:
        raise MalformedXml(f"nested dataflow cycle through '{flow.flow_id}'")
    visiting = visiting | {flow.flow_id}

    processors: list[Processor] = []
    links: list[DataLink] = []
    # Per nested processor: how outer links are rewired into the child graph.
    inner_sinks: dict[str, dict[str, list[ProcessorPortRef]]] = {}
    inner_sources: dict[str, dict[str, ProcessorPortRef]] = {}

    for proc in flow.processors:
        ref = flow.nested_refs.get(proc.name)
        if ref is None:
            processors.append(proc)
            continue
        child = flows_by_id.get(ref)
        if child is None:
            raise MalformedXml(f"processor '{proc.name}' references unknown dataflow '{ref}'")
        child_procs, child_links = _flatten(child, flows_by_id, visiting)
        rename = {p.name: f"{proc.name}.{p.name}" for p in child_procs}
        for p in child_procs:
            processors.append(
                Processor(
                    name=rename[p.name],
                    activity_kind=p.activity_kind,
                    endpoint=p.endpoint,
                    script_text=p.script_text,
                    input_ports=p.input_ports,
                    output_ports=p.output_ports,
                )
            )
        sinks: dict[str, list[ProcessorPortRef]] = {}
        sources: dict[str, ProcessorPortRef] = {}
        for link in child_links:
            src, snk = link.source, link.sink
            if isinstance(src, WorkflowInputRef):
                if isinstance(snk, ProcessorPortRef):
                    sinks.setdefault(src.name, []).append(
                        ProcessorPortRef(rename.get(snk.processor, snk.processor), snk.port)
                    )
                continue
            if isinstance(snk, WorkflowOutputRef):
                if isinstance(src, ProcessorPortRef):
                    sources[snk.name] = ProcessorPortRef(rename.get(src.processor, src.processor), src.port)
                continue
            assert isinstance(src, ProcessorPortRef) and isinstance(snk, ProcessorPortRef)
            links.append(
                DataLink(
                    ProcessorPortRef(rename.get(src.processor, src.processor), src.port),
                    ProcessorPortRef(rename.get(snk.processor, snk.processor), snk.port),
                )
            )
        inner_sinks[proc.name] = sinks
        inner_sources[proc.name] = sources

    for link in flow.links:
        src, snk = link.source, link.sink
        if isinstance(src, ProcessorPortRef) and src.processor in inner_sources:
            src = inner_sources[src.processor].get(src.port, src)
        if isinstance(snk, ProcessorPortRef) and snk.processor in inner_sinks:
            targets = inner_sinks[snk.processor].get(snk.port)
            if targets:
                for target in targets:
                    links.append(DataLink(src, target))
                continue
        links.append(DataLink(src, snk))

    return processors, links


def _parse_t2flow(root: ET.Element, digest: str) -> LegacyWorkflow:
    annotations: dict[str, str] = {}
    flow_elements = _children(root, "dataflow")
    flows = [_parse_dataflow(f, annotations) for f in flow_elements]
    flows_by_id = {f.flow_id: f for f in flows}
    top = flows[0]
    for f, el in zip(flows, flow_elements):
        if (el.get("role") or "").lower() == "top":
            top = f
            break
    processors, links = _flatten(top, flows_by_id, frozenset())
    return LegacyWorkflow(
        format=WorkflowFormat.T2FLOW,
        title=top.name,
        source_digest=digest,
        processors=tuple(processors),
        datalinks=tuple(links),
        workflow_inputs=tuple(n for n, _ in top.inputs),
        workflow_outputs=tuple(top.outputs),
        raw_annotations=annotations,
    )


# --------------------------------------------------------------------------
# SCUFL parsing


def _scufl_endpoint_ref(token: str, is_sink: bool) -> LinkEnd:
    if ":" in token:
        proc, port = token.split(":", 1)
        return ProcessorPortRef(proc.strip(), port.strip())
    name = token.strip()
    return WorkflowOutputRef(name) if is_sink else WorkflowInputRef(name)


def _parse_scufl(root: ET.Element, digest: str) -> LegacyWorkflow:
    annotations: dict[str, str] = {}
    title = "untitled workflow"
    desc = _child(root, "workflowdescription")
    if desc is not None:
        title = (desc.get("title") or _text(desc)).strip() or title

    raw_procs: list[tuple[str, ActivityKind, ServiceEndpoint | None, str | None]] = []
    for proc in _children(root, "processor"):
        pname = (proc.get("name") or "").strip()
        kind, endpoint, script = ActivityKind.OPAQUE, None, None
        recognized = False
        for child in proc:
            cname = _local(child.tag)
            if cname == "arbitrarywsdl":
                wsdl = _text(_child(child, "wsdl")).strip()
                operation = _text(_child(child, "operation")).strip()
                if wsdl:
                    kind, endpoint = ActivityKind.SOAP_CALL, ServiceEndpoint(Protocol.SOAP, wsdl, operation)
                    recognized = True
            elif cname == "beanshell":
                script_text = _descendant_text(child, "scriptvalue")
                if script_text is not None:
                    kind, script = ActivityKind.LOCAL_SCRIPT, script_text
                    recognized = True
            elif cname == "stringconstant":
                kind, script = ActivityKind.STRING_CONSTANT, (child.text or "")
                recognized = True
        if not recognized:
            annotations[f"opaque_activity:{pname}"] = ET.tostring(proc, encoding="unicode")
        raw_procs.append((pname, kind, endpoint, script))

    links: list[DataLink] = []
    for link in _children(root, "link"):
        src_attr, sink_attr = link.get("source"), link.get("sink")
        if src_attr is None or sink_attr is None:
            src_attr = _text(_child(link, "input")) or src_attr
            sink_attr = _text(_child(link, "output")) or sink_attr
        if not src_attr or not sink_attr:
            continue
        links.append(
            DataLink(
                _scufl_endpoint_ref(src_attr, is_sink=False),
                _scufl_endpoint_ref(sink_attr, is_sink=True),
            )
        )

    inputs = [(el.get("name") or "").strip() for el in _children(root, "source")]
    outputs = [(el.get("name") or "").strip() for el in _children(root, "sink")]

    # SCUFL declares no explicit processor ports; infer them from links.
    in_ports: dict[str, list[str]] = {}
    out_ports: dict[str, list[str]] = {}
    for link in links:
        if isinstance(link.sink, ProcessorPortRef):
            ports = in_ports.setdefault(link.sink.processor, [])
            if link.sink.port not in ports:
                ports.append(link.sink.port)
        if isinstance(link.source, ProcessorPortRef):
            ports = out_ports.setdefault(link.source.processor, [])
            if link.source.port not in ports:
                ports.append(link.source.port)

    processors = tuple(
        Processor(
            name=pname,
            activity_kind=kind,
            endpoint=endpoint,
            script_text=script,
            input_ports=tuple(Port(n) for n in in_ports.get(pname, [])),
            output_ports=tuple(Port(n) for n in out_ports.get(pname, [])),
        )
        for pname, kind, endpoint, script in raw_procs
    )
    return LegacyWorkflow(
        format=WorkflowFormat.SCUFL,
        title=title,
        source_digest=digest,
        processors=processors,
        datalinks=tuple(links),
        workflow_inputs=tuple(n for n in inputs if n),
        workflow_outputs=tuple(n for n in outputs if n),
        raw_annotations=annotations,
    )


# --------------------------------------------------------------------------
# Entry points


def parse_legacy(raw: bytes) -> LegacyWorkflow:
    """Parse a workflow document into the in-memory legacy model.

    Raises MalformedXml for unparseable bytes, UnsupportedFormat for XML
    that is not a known workflow dialect, and DanglingLink when datalinks
    reference processors or ports that do not exist.
    """
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    fmt = detect_format(raw)
    if fmt is WorkflowFormat.UNKNOWN:
        raise UnsupportedFormat(f"root element '{_local(root.tag)}' is not a known workflow format")
    digest = sha256_hex(raw)
    wf = _parse_t2flow(root, digest) if fmt is WorkflowFormat.T2FLOW else _parse_scufl(root, digest)
    _check_links(wf)
    return wf


def _check_links(wf: LegacyWorkflow) -> None:
    names = [p.name for p in wf.processors]
    if len(names) != len(set(names)):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise MalformedXml(f"duplicate processor names: {', '.join(dupes)}")
    by_name = {p.name: p for p in wf.processors}
    missing: list[str] = []
    for link in wf.datalinks:
        for end, direction in ((link.source, "out"), (link.sink, "in")):
            if isinstance(end, ProcessorPortRef):
                proc = by_name.get(end.processor)
                if proc is None:
                    missing.append(end.processor)
                    continue
                ports = proc.output_ports if direction == "out" else proc.input_ports
                if end.port and all(p.name != end.port for p in ports):
                    missing.append(f"{end.processor}.{end.port}")
            elif isinstance(end, WorkflowInputRef) and end.name not in wf.workflow_inputs:
                missing.append(end.name)
            elif isinstance(end, WorkflowOutputRef) and end.name not in wf.workflow_outputs:
                missing.append(end.name)
    if missing:
        raise DanglingLink(missing)


def lint_legacy(wf: LegacyWorkflow) -> list[LintFinding]:
    """Pre-revival diagnostics surfaced to the curator. Empty means clean."""
    findings: list[LintFinding] = []
    for proc in wf.processors:
        if proc.activity_kind is ActivityKind.OPAQUE:
            findings.append(
                LintFinding(
                    "warning",
                    f"processor '{proc.name}' uses an unrecognized activity and will need curator help",
                    proc.name,
                )
            )
    outgoing = {
        link.source.processor for link in wf.datalinks if isinstance(link.source, ProcessorPortRef)
    }
    for proc in wf.processors:
        if proc.name not in outgoing:
            findings.append(
                LintFinding(
                    "warning",
                    f"unreachable processor '{proc.name}': no outgoing datalinks, its results go nowhere",
                    proc.name,
                )
            )
    if not wf.workflow_outputs:
        findings.append(LintFinding("warning", "workflow declares no outputs", "workflow"))
    return findings
