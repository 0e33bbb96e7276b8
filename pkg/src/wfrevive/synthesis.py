"""Two-stage pivot-script synthesis.

Stage one builds a deterministic skeleton from the IR: one Python function
per functional step plus a main orchestrator that threads data between
them. Stage two fills the function bodies through a pluggable provider:
the deterministic provider templates bodies from step kind and endpoint,
while the remote provider asks a generative model and syntax-checks the
answer. Rejected bodies fall back to curator-checkpoint markers instead of
silently guessing.
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping
from urllib.parse import urlparse

from ._util import snake_case, unique_name
from .errors import ProviderUnavailable, UnsubstitutedEndpoint
from .ir import SINK_ID as SINK_STEP_ID
from .ir import Edge, Step, StepKind, WorkflowIR
from .services import Protocol, ResponseAdapter, ServiceEndpoint, SubstitutionRule, describe_rule

ROLE_PREAMBLE = (
    "You are a workflow repair specialist that converts broken scientific "
    "workflows into a single working Python script."
)

NEEDS_CURATOR_MARKER = "NEEDS_CURATOR"

PLACEHOLDER_BODY = "pass"


class Capability(str, Enum):
    BODY_FILL = "body_fill"
    SUBSTITUTION_SUGGEST = "substitution_suggest"
    SUMMARIZE = "summarize"


@dataclass(frozen=True)
class PromptRequest:
    """One body-fill request; byte-stable for identical inputs."""

    role_preamble: str
    ir_excerpt: str
    rules: tuple[str, ...]
    expected_shape: str

    def to_prompt_text(self) -> str:
        rules_block = "\n".join(f"- {r}" for r in self.rules) or "- (none active)"
        return (
            f"{self.role_preamble}\n\n"
            f"## Step To Repair\n{self.ir_excerpt}\n\n"
            f"## Service Replacement Rules\n{rules_block}\n\n"
            f"## Expected Output\n{self.expected_shape}\n"
        )


@dataclass(frozen=True)
class PivotFunction:
    step_id: str
    name: str
    params: tuple[str, ...]
    summary: str
    body: str
    populated: bool

    @property
    def signature(self) -> str:
        return f"def {self.name}({', '.join(self.params)}):"

    def to_dict(self) -> dict:
        return {
            "step_id": self.step_id,
            "name": self.name,
            "params": list(self.params),
            "summary": self.summary,
            "body": self.body,
            "populated": self.populated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PivotFunction":
        return cls(
            step_id=d["step_id"],
            name=d["name"],
            params=tuple(d["params"]),
            summary=d["summary"],
            body=d["body"],
            populated=d["populated"],
        )


@dataclass(frozen=True)
class PivotScript:
    """The modular single-file pivot program synthesized from the IR."""

    title: str
    original_format: str
    domain: str
    config_input: str
    config_output: str
    apis: tuple[tuple[str, str], ...]
    functions: tuple[PivotFunction, ...]
    main_body: str
    rejected: tuple[tuple[str, str], ...] = ()

    @property
    def header(self) -> str:
        return (
            f"Repaired Workflow: {self.title}\n"
            f"Original: {self.original_format} -> Repaired Python Script\n"
            f"Domain: {self.domain}"
        )

    @property
    def config(self) -> dict:
        return {
            "input": self.config_input,
            "output": self.config_output,
            "apis": dict(self.apis),
        }

    def function_for(self, step_id: str) -> PivotFunction:
        for fn in self.functions:
            if fn.step_id == step_id:
                return fn
        raise KeyError(step_id)

    def fully_populated(self) -> bool:
        return all(fn.populated for fn in self.functions)

    def render(self) -> str:
        return render_script(self)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "original_format": self.original_format,
            "domain": self.domain,
            "config_input": self.config_input,
            "config_output": self.config_output,
            "apis": [list(pair) for pair in self.apis],
            "functions": [fn.to_dict() for fn in self.functions],
            "main_body": self.main_body,
            "rejected": [list(pair) for pair in self.rejected],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PivotScript":
        return cls(
            title=d["title"],
            original_format=d["original_format"],
            domain=d["domain"],
            config_input=d["config_input"],
            config_output=d["config_output"],
            apis=tuple((a, b) for a, b in d["apis"]),
            functions=tuple(PivotFunction.from_dict(f) for f in d["functions"]),
            main_body=d["main_body"],
            rejected=tuple((a, b) for a, b in d.get("rejected", ())),
        )


# --------------------------------------------------------------------------
# Naming helpers


def service_name(base_url: str) -> str:
    """Short service label: the second-to-last host label (kegg for rest.kegg.jp)."""
    host = urlparse(base_url).netloc.lower().split(":")[0]
    labels = [l for l in host.split(".") if l]
    label = labels[-2] if len(labels) >= 2 else (labels[0] if labels else "service")
    return snake_case(label)


def api_map(ir: WorkflowIR) -> dict[str, tuple[str, str]]:
    """step_id -> (api name, base url) for every ServiceCall step."""
    names: dict[str, str] = {}  # base_url -> api name
    taken: set[str] = set()
    mapping: dict[str, tuple[str, str]] = {}
    for step in ir.functional_steps():
        if step.kind is not StepKind.SERVICE_CALL or step.endpoint is None:
            continue
        base = step.endpoint.base_url.rstrip("/")
        if base not in names:
            name = unique_name(service_name(base), taken)
            taken.add(name)
            names[base] = name
        mapping[step.id] = (names[base], base)
    return mapping


_RESERVED_PARAMS = {
    "json", "os", "sys", "main", "print", "input", "str", "list", "dict",
    "read_text", "write_json", "as_items", "render_path", "http_get",
    "parse_tab_pairs", "parse_line_list", "unknown_adapter",
}


def _param_name(port: str, taken: set[str]) -> str:
    name = snake_case(port)
    if name in _RESERVED_PARAMS:
        name = f"{name}_value"
    return unique_name(name, taken)


def infer_domain(ir: WorkflowIR) -> str:
    text = " ".join(
        [ir.title.lower()]
        + [s.id for s in ir.steps]
        + [s.endpoint.base_url.lower() for s in ir.steps if s.endpoint]
    )
    bio = ("gene", "kegg", "protein", "dna", "uniprot", "pdb", "blat", "sequence", "pathway", "bio")
    chem = ("chem", "cas", "molecule", "compound", "ugi", "sdf", "sd_file")
    if any(tok in text for tok in bio):
        return "bio"
    if any(tok in text for tok in chem):
        return "chem"
    return "generic"


# --------------------------------------------------------------------------
# Adapter transliteration (beanshell-style string chains -> python exprs)

_JAVA_METHODS = {
    ".trim()": ".strip()",
    ".toLowerCase()": ".lower()",
    ".toUpperCase()": ".upper()",
}
_ALLOWED_CALLS = {"split", "strip", "replace", "join", "lower", "upper", "str"}


class _InputSwap(ast.NodeTransformer):
    def __init__(self, input_name: str, replacement: ast.expr):
        self.input_name = input_name
        self.replacement = replacement

    def visit_Name(self, node: ast.Name):
        if node.id == self.input_name:
            return self.replacement
        return node


def _expr_input_names(tree: ast.expression) -> set[str]:
    names: set[str] = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            names.add(node.id)
    return names - _ALLOWED_CALLS


def _expr_is_safe(tree: ast.expression) -> bool:
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Name, ast.Load)):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (str, int)):
            continue
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Add):
            continue
        if isinstance(node, ast.Attribute) and node.attr in _ALLOWED_CALLS:
            continue
        if isinstance(node, ast.Call):
            func = node.func
            ok = (isinstance(func, ast.Attribute) and func.attr in _ALLOWED_CALLS) or (
                isinstance(func, ast.Name) and func.id in _ALLOWED_CALLS
            )
            if ok:
                continue
        if isinstance(node, (ast.Add,)):
            continue
        return False
    return True


def transliterate_adapter(script: str) -> str | None:
    """Turn a pure string-adapter script into a Python expression of `_item`.

    Handles straight-line chains of assignments whose right-hand sides use
    only string literals, one input variable, concatenation, and a small
    set of string methods. Returns None when the script falls outside that
    subset; callers must then raise a curator checkpoint instead.
    """
    if not script or not script.strip():
        return None
    current: ast.expr = ast.parse("str(_item)", mode="eval").body
    known_output: str | None = None
    for raw_line in script.splitlines():
        line = raw_line.strip().rstrip(";").strip()
        if not line or line.startswith(("//", "#")):
            continue
        for java, py in _JAVA_METHODS.items():
            line = line.replace(java, py)
        assignment = re.match(r"^([^=+\-*/%<>!&|^]+)=(?!=)(.*)$", line)
        if assignment:
            lhs = assignment.group(1).strip().split()[-1]  # drop `String`-style type prefix
            rhs = assignment.group(2)
            if not re.fullmatch(r"[A-Za-z_]\w*", lhs):
                return None
        else:
            lhs, rhs = None, line
        try:
            tree = ast.parse(rhs.strip(), mode="eval")
        except SyntaxError:
            return None
        if not _expr_is_safe(tree):
            return None
        inputs = _expr_input_names(tree)
        if known_output is not None:
            expected = {known_output}
        else:
            expected = inputs  # first line: the single free name is the input
        if len(inputs) > 1 or (inputs and inputs != expected and known_output is not None):
            return None
        if inputs:
            swapped = _InputSwap(next(iter(inputs)), current).visit(tree)
            ast.fix_missing_locations(swapped)
            current = swapped.body
        else:
            current = tree.body
        known_output = lhs
    try:
        return ast.unparse(current)
    except Exception:
        return None


# --------------------------------------------------------------------------
# Prompt rendering


def render_prompt(ir: WorkflowIR, step: Step, rules: list[SubstitutionRule] | list[str]) -> PromptRequest:
    """Build the body-fill request for one step. Pure and byte-stable."""
    if not any(s.id == step.id for s in ir.steps):
        raise KeyError(f"step '{step.id}' is not part of the workflow")
    rule_texts = tuple(r if isinstance(r, str) else describe_rule(r) for r in rules)
    lines = [
        f"Step: {step.id}",
        f"Kind: {step.kind.value}",
        f"Summary: {step.summary}",
        f"Inputs: {', '.join(step.in_ports) or '(none)'}",
        f"Outputs: {', '.join(step.out_ports) or '(none)'}",
    ]
    if step.endpoint is not None:
        lines.append(
            f"Endpoint: {step.endpoint.protocol.value.upper()} "
            f"{step.endpoint.base_url.rstrip('/')}{step.endpoint.operation}"
        )
    if step.script_text:
        lines.append("Original script:")
        lines.extend(f"    {l}" for l in step.script_text.splitlines())
    adapters = [e for e in ir.in_edges(step.id) + ir.out_edges(step.id) if e.adapter_script]
    if adapters:
        lines.append("Adapters on incident links:")
        for e in adapters:
            lines.append(f"  - {e.from_step} -> {e.to_step}:")
            lines.extend(f"      {l}" for l in e.adapter_script.splitlines())
    fn_name = _function_name_for(ir, step.id)
    taken: set[str] = set()
    params = ", ".join(_param_name(p, taken) for p in step.in_ports)
    expected = (
        f"Return only the Python body of the function {fn_name}({params}). "
        "The body must compute and return the step's output value, and may "
        "reference service URLs only through CONFIG['apis']."
    )
    return PromptRequest(
        role_preamble=ROLE_PREAMBLE,
        ir_excerpt="\n".join(lines),
        rules=rule_texts,
        expected_shape=expected,
    )


def _function_name_for(ir: WorkflowIR, step_id: str) -> str:
    for index, step in enumerate(ir.functional_steps(), start=1):
        if step.id == step_id:
            return f"step_{index}_{step_id}"
    return f"step_0_{step_id}"


# --------------------------------------------------------------------------
# Providers


def _marker_body(step_id: str, reason: str) -> str:
    message = f"{NEEDS_CURATOR_MARKER}: step '{step_id}' {reason}"
    return f"raise RuntimeError({message!r})"


_READER_TOKENS = re.compile(r"""split\(["']\\n|readline|readlines|bufferedreader""", re.IGNORECASE)


class DeterministicProvider:
    """Template-driven provider: a pure function of (IR, substitutions).

    `adapters` maps ServiceCall step ids to the response adapter recorded
    when their endpoint was substituted.
    """

    capabilities = frozenset({Capability.BODY_FILL, Capability.SUMMARIZE})

    def __init__(self, adapters: Mapping[str, ResponseAdapter] | None = None):
        self.adapters = dict(adapters or {})

    # -- body synthesis

    def fill_body(self, request: PromptRequest, *, step: Step, ir: WorkflowIR) -> str:
        if step.kind is StepKind.SERVICE_CALL:
            return self._service_body(step, ir)
        if step.kind in (StepKind.LOCAL_COMPUTE, StepKind.SHIM):
            return self._local_body(step)
        return _marker_body(step.id, "performs an unrecognized activity")

    def _service_body(self, step: Step, ir: WorkflowIR) -> str:
        endpoint = step.endpoint
        assert endpoint is not None
        if endpoint.protocol is not Protocol.REST:
            return _marker_body(step.id, "still calls a retired protocol")
        api = api_map(ir).get(step.id)
        if api is None:
            return _marker_body(step.id, "has no registered service")
        api_name = api[0]
        adapter = self.adapters.get(step.id, ResponseAdapter.NONE)
        operation = endpoint.operation
        has_placeholder = "{" in operation
        collect_init, collect_line = {
            ResponseAdapter.TAB_SEPARATED_PAIRS: ("{}", "results.update(parse_tab_pairs(http_get(url)))"),
            ResponseAdapter.LINE_LIST: ("[]", "results.extend(parse_line_list(http_get(url)))"),
            ResponseAdapter.NONE: ("[]", "results.append(http_get(url))"),
        }[adapter]
        if not step.in_ports:
            if has_placeholder:
                return _marker_body(step.id, "needs input values for its service path")
            return "\n".join(
                [
                    f"url = CONFIG['apis'][{api_name!r}] + {operation!r}",
                    "results = " + collect_init,
                    collect_line,
                    "return results",
                ]
            )
        if len(step.in_ports) > 1:
            return _marker_body(step.id, "combines several inputs into one service call")
        taken: set[str] = set()
        param = _param_name(step.in_ports[0], taken)
        if has_placeholder:
            url_line = f"url = CONFIG['apis'][{api_name!r}] + render_path({operation!r}, item)"
        else:
            url_line = f"url = CONFIG['apis'][{api_name!r}] + {operation!r}"
        return "\n".join(
            [
                f"results = {collect_init}",
                f"for item in as_items({param}):",
                f"    {url_line}",
                f"    {collect_line}",
                "return results",
            ]
        )

    def _local_body(self, step: Step) -> str:
        script = step.script_text or ""
        if not step.in_ports:
            if step.script_text is None:
                return _marker_body(step.id, "has no script to transliterate")
            return f"return {script!r}"
        taken: set[str] = set()
        params = [_param_name(p, taken) for p in step.in_ports]
        if len(step.in_ports) == 1 and _READER_TOKENS.search(script):
            return "\n".join(
                [
                    f"items = [line.strip() for line in str({params[0]}).splitlines() if line.strip()]",
                    "return items",
                ]
            )
        if len(step.in_ports) == 1:
            expr = transliterate_adapter(script)
            if expr is not None:
                return "\n".join(
                    [
                        f"values = [{expr} for _item in as_items({params[0]})]",
                        "return values[0] if len(values) == 1 else values",
                    ]
                )
            return _marker_body(step.id, "runs a script the engine cannot translate")
        if "+" in script:
            tuple_expr = ", ".join(params)
            return "\n".join(
                [
                    "combined = []",
                    f"for part in ({tuple_expr}):",
                    "    combined.extend(as_items(part))",
                    "return combined",
                ]
            )
        return _marker_body(step.id, "combines inputs in a way the engine cannot translate")

    # -- summaries

    def summarize(self, step: Step) -> str:
        if step.kind is StepKind.SOURCE:
            return "Provides the workflow's input values."
        if step.kind is StepKind.SINK:
            return "Collects the workflow's final outputs."
        if step.kind is StepKind.SHIM:
            return "Adapts data format between two steps."
        if step.kind is StepKind.SERVICE_CALL and step.endpoint is not None:
            host = step.endpoint.host
            op = step.endpoint.operation.lower()
            if "kegg" in host and "conv" in op:
                return "Converts source gene identifiers to KEGG identifiers via the KEGG conversion service."
            if "kegg" in host and "pathway" in op:
                return "Looks up the biological pathways linked to each gene via the KEGG pathway service."
            return f"Calls the {service_name(step.endpoint.base_url)} web service to transform its input."
        if step.kind is StepKind.LOCAL_COMPUTE:
            if not step.in_ports:
                return "Provides a fixed text value."
            if _READER_TOKENS.search(step.script_text or ""):
                return "Reads the raw input and splits it into individual records."
            return f"Runs the local computation '{step.id}' over its inputs."
        return "Performs an activity the engine could not classify; curator review is needed."

    def suggest_substitution(self, endpoint: ServiceEndpoint) -> SubstitutionRule | None:
        return None


class RemoteProvider:
    """Generative-model provider speaking a single HTTPS JSON endpoint.

    Request: {"prompt": str, "max_tokens": int}; response: {"text": str}.
    The model identity lives in server-side configuration, not here.
    Responses are syntax-checked by the caller; transport failures are
    retried at most twice before ProviderUnavailable.
    """

    capabilities = frozenset(
        {Capability.BODY_FILL, Capability.SUBSTITUTION_SUGGEST, Capability.SUMMARIZE}
    )

    def __init__(self, endpoint_url: str, transport, max_tokens: int = 2048):
        self.endpoint_url = endpoint_url
        self.transport = transport
        self.max_tokens = max_tokens

    def _complete(self, prompt: str) -> str:
        payload = {"prompt": prompt, "max_tokens": self.max_tokens}
        last_error: Exception | None = None
        for _ in range(3):  # one attempt plus two retries
            try:
                text = self.transport.post_json(self.endpoint_url, payload)
                return str(json.loads(text)["text"]) if isinstance(text, str) else str(text["text"])
            except Exception as exc:  # noqa: BLE001 - transport abstraction
                last_error = exc
        raise ProviderUnavailable(f"synthesis endpoint unreachable: {last_error}")

    def fill_body(self, request: PromptRequest, *, step: Step, ir: WorkflowIR) -> str:
        return self._complete(request.to_prompt_text())

    def summarize(self, step: Step) -> str:
        prompt = (
            f"{ROLE_PREAMBLE}\n\nIn at most two sentences, summarize the role of "
            f"workflow step '{step.id}' ({step.kind.value})."
        )
        return self._complete(prompt).strip()

    def suggest_substitution(self, endpoint: ServiceEndpoint) -> SubstitutionRule | None:
        return None


# --------------------------------------------------------------------------
# Skeleton construction


def build_skeleton(ir: WorkflowIR, original_format: str = "legacy workflow") -> PivotScript:
    """Deterministic stage-one synthesis: functions, config, and main.

    The body of every step function is a placeholder; main already threads
    each step's outputs to its successors (applying edge adapters on the
    consumer side) so stage two only fills bodies. Raises
    UnsubstitutedEndpoint if a service step still points at a retired
    protocol.
    """
    functional = ir.functional_steps()
    apis = api_map(ir)
    for step in functional:
        if step.kind is StepKind.SERVICE_CALL and step.endpoint is not None:
            if step.endpoint.protocol is not Protocol.REST:
                raise UnsubstitutedEndpoint(step.id)

    multi_input = len(ir.inputs) > 1
    config_input = "input" if multi_input else "input/input.txt"
    api_pairs = tuple(sorted({pair for pair in apis.values()}))

    functions: list[PivotFunction] = []
    for index, step in enumerate(functional, start=1):
        taken: set[str] = set()
        params = tuple(_param_name(p, taken) for p in step.in_ports)
        functions.append(
            PivotFunction(
                step_id=step.id,
                name=f"step_{index}_{step.id}",
                params=params,
                summary=step.summary,
                body=PLACEHOLDER_BODY,
                populated=False,
            )
        )
    fn_by_step = {fn.step_id: fn for fn in functions}

    prelude: list[str] = ["print('Repaired workflow: ' + CONFIG['input'] + ' -> ' + CONFIG['output'])"]
    rejected: list[tuple[str, str]] = []

    value_vars: dict[tuple[str, str], str] = {}
    taken_vars: set[str] = set()
    if ir.inputs:
        prelude.append("if not os.path.exists(CONFIG['input']):")
        prelude.append("    raise RuntimeError('MISSING_INPUT: expected sample data at ' + CONFIG['input'])")
        for inp in ir.inputs:
            var = unique_name(f"_in_{snake_case(inp.name)}", taken_vars)
            taken_vars.add(var)
            if multi_input:
                prelude.append(f"{var} = read_text(os.path.join(CONFIG['input'], {inp.name + '.txt'!r}))")
            else:
                prelude.append(f"{var} = read_text(CONFIG['input'])")
            value_vars[("source", inp.name)] = var

    def resolve_edge(edge: Edge, staging: list[str]) -> str:
        """Variable holding the edge's value, staging adapter lines as needed."""
        base = value_vars.get((edge.from_step, edge.from_port))
        if base is None:
            return "None"
        if not edge.adapter_script:
            return base
        expr = transliterate_adapter(edge.adapter_script)
        if expr is None:
            rejected.append(
                (edge.to_step, f"adapter between '{edge.from_step}' and '{edge.to_step}' is not translatable")
            )
            expr = f"unknown_adapter(_item, {edge.to_step!r})"
        adapted = unique_name(snake_case(edge.to_port), taken_vars)
        taken_vars.add(adapted)
        staging.append(f"{adapted} = [{expr} for _item in as_items({base})]")
        return adapted

    lines = list(prelude)
    if functional:
        body: list[str] = []
        for step in functional:
            body.append(f"_step = {step.id!r}")
            args: list[str] = []
            for port in step.in_ports:
                incoming = [e for e in ir.in_edges(step.id) if e.to_port == port]
                if not incoming:
                    args.append("None")
                elif len(incoming) == 1:
                    args.append(resolve_edge(incoming[0], body))
                else:
                    args.append(" + ".join(f"as_items({resolve_edge(e, body)})" for e in incoming))
            out_var = unique_name(f"_out_{step.id}", taken_vars)
            taken_vars.add(out_var)
            body.append(f"{out_var} = {fn_by_step[step.id].name}({', '.join(args)})")
            for port in step.out_ports:
                value_vars[(step.id, port)] = out_var
        final_exprs: list[tuple[str, str]] = []
        for edge in (e for e in ir.edges if e.to_step == SINK_STEP_ID):
            final_exprs.append((edge.to_port, resolve_edge(edge, body)))
        lines.append("_step = 'setup'")
        lines.append("try:")
        lines.extend("    " + l for l in body)
        lines.append("except Exception:")
        lines.append("    sys.stderr.write('STEP_FAILED:' + _step + chr(10))")
        lines.append("    raise")
        if len(final_exprs) == 1:
            lines.append(f"write_json(CONFIG['output'], {final_exprs[0][1]})")
        elif final_exprs:
            pairs = ", ".join(f"{name!r}: {var}" for name, var in final_exprs)
            lines.append(f"write_json(CONFIG['output'], {{{pairs}}})")
        else:
            lines.append("write_json(CONFIG['output'], None)")
    elif ir.inputs and not multi_input:
        lines.append("write_json(CONFIG['output'], read_text(CONFIG['input']))")
    else:
        lines.append("write_json(CONFIG['output'], None)")
    lines.append("print('Wrote ' + CONFIG['output'])")

    return PivotScript(
        title=ir.title,
        original_format=original_format,
        domain=infer_domain(ir),
        config_input=config_input,
        config_output="results/output.json",
        apis=api_pairs,
        functions=tuple(functions),
        main_body="\n".join(lines),
        rejected=tuple(rejected),
    )


# --------------------------------------------------------------------------
# Body population


def populate_bodies(skeleton: PivotScript, ir: WorkflowIR, provider) -> PivotScript:
    """Fill every placeholder body through the provider.

    Bodies that fail the syntax check become curator-checkpoint markers and
    are listed in `rejected`; population never invents a silent guess.
    """
    rules_cache: tuple[str, ...] = ()
    filled: list[PivotFunction] = []
    rejected = list(skeleton.rejected)
    for fn in skeleton.functions:
        step = ir.step(fn.step_id)
        request = render_prompt(ir, step, list(rules_cache))
        try:
            body = provider.fill_body(request, step=step, ir=ir)
        except ProviderUnavailable:
            raise
        reason = _body_problem(fn, body)
        if reason is not None:
            rejected.append((fn.step_id, reason))
            body = _marker_body(fn.step_id, "produced an unusable implementation")
        filled.append(replace(fn, body=body.rstrip(), populated=True))
    return replace(skeleton, functions=tuple(filled), rejected=tuple(rejected))


def _body_problem(fn: PivotFunction, body: str) -> str | None:
    if not body or not body.strip():
        return "empty body"
    wrapped = f"def {fn.name}({', '.join(fn.params)}):\n" + _indent(body.rstrip(), 4)
    try:
        compile(wrapped, f"<body:{fn.step_id}>", "exec")
    except SyntaxError as exc:
        return f"syntax error: {exc.msg}"
    return None


def summarize_step(step: Step, provider) -> str:
    """Ask the provider for the step's two-sentence conceptual summary."""
    return provider.summarize(step)


# --------------------------------------------------------------------------
# Rendering


_HELPERS = '''
def read_text(path):
    with open(path, 'r', encoding='utf-8') as fh:
        return fh.read()


def write_json(path, value):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(value, fh, indent=2, sort_keys=True)
        fh.write('\\n')


def as_items(value):
    if value is None:
        return []
    if isinstance(value, dict):
        return list(value.values())
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str):
        # raw text is treated as line-oriented records
        return [line.strip() for line in value.splitlines() if line.strip()]
    return [value]


def render_path(template, value):
    out = template
    while '{' in out and '}' in out:
        start = out.index('{')
        end = out.index('}', start)
        out = out[:start] + str(value) + out[end + 1:]
    return out


def unknown_adapter(value, step_id):
    raise RuntimeError('NEEDS_CURATOR: step ' + repr(step_id) + ' uses an adapter the engine cannot translate')


def http_get(url):
    recorded_path = os.environ.get('WORKFLOW_HTTP_FIXTURES')
    if recorded_path:
        with open(recorded_path, 'r', encoding='utf-8') as fh:
            recorded = json.load(fh)
        entry = recorded.get('GET ' + url)
        if entry is None:
            raise RuntimeError('HTTP_UNREACHABLE: no recorded response for ' + url)
        if int(entry.get('status', 0)) >= 400:
            raise RuntimeError('HTTP_ERROR %s for %s' % (entry.get('status'), url))
        return str(entry.get('body', ''))
    import urllib.request
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read().decode('utf-8', 'replace')


def parse_tab_pairs(body):
    mapping = {}
    for line_no, line in enumerate(body.split('\\n'), start=1):
        if not line.strip():
            continue
        left, sep, right = line.partition('\\t')
        if not sep:
            raise RuntimeError('RESPONSE_FORMAT: line %d has no tab separator' % line_no)
        mapping[left.strip().split(':', 1)[-1]] = right.strip()
    return mapping


def parse_line_list(body):
    values = []
    for line in body.split('\\n'):
        line = line.strip()
        if not line:
            continue
        last = line.split('\\t')[-1]
        values.append(last.split(':', 1)[-1] if ':' in last else last)
    return values
'''.strip("\n")


def _indent(text: str, spaces: int) -> str:
    pad = " " * spaces
    return "\n".join(pad + line if line.strip() else line for line in text.splitlines())


def render_config(script: PivotScript) -> str:
    api_items = ", ".join(f"{name!r}: {url!r}" for name, url in script.apis)
    return (
        "CONFIG = {\n"
        f"    'input': {script.config_input!r},\n"
        f"    'output': {script.config_output!r},\n"
        f"    'apis': {{{api_items}}},\n"
        "}"
    )


def render_function(fn: PivotFunction, banner: str) -> str:
    lines = [fn.signature]
    lines.append(f'    """{fn.summary}"""')
    lines.append(f"    print({banner!r})")
    lines.append(_indent(fn.body, 4))
    return "\n".join(lines)


def render_script(script: PivotScript) -> str:
    """Materialize the pivot as one executable Python file."""
    parts = [
        "#!/usr/bin/env python3",
        f'"""\n{script.header}\n"""',
        "import json\nimport os\nimport sys",
        render_config(script),
        _HELPERS,
    ]
    for index, fn in enumerate(script.functions, start=1):
        parts.append(render_function(fn, f" Step {index}: {fn.step_id}"))
    main_lines = ["def main():"]
    main_lines.append(_indent(script.main_body, 4))
    parts.append("\n".join(main_lines))
    parts.append("if __name__ == '__main__':\n    main()")
    return "\n\n\n".join(parts) + "\n"
