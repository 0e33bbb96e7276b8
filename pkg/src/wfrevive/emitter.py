"""Transpilation of a validated pivot script into a Snakemake workflow.

Each pivot function becomes one rule whose script embeds the function body
verbatim, so the target workflow cannot drift from the validated pivot.
Intermediate artifacts are JSON files under `results/`, named after the
data flowing along the IR edges. A minimal internal Snakefile reader backs
the structural checker and a local runner, keeping the engine free of a
Snakemake dependency.
"""

from __future__ import annotations

import json
import os
import re
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import yaml

from ._util import snake_case, unique_name
from .errors import EmissionImpossible
from .ir import SINK_ID, SOURCE_ID, StepKind, WorkflowIR, topo_order
from .synthesis import (
    NEEDS_CURATOR_MARKER,
    PivotFunction,
    PivotScript,
    api_map,
    render_function,
    transliterate_adapter,
)
from .synthesis import _HELPERS as HELPER_BLOCK  # shared with the pivot renderer


@dataclass(frozen=True)
class RuleSpec:
    """One Snakemake rule as emitted (and as re-read by the mini reader)."""

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    log: str | None
    params: tuple[tuple[str, str], ...]
    script: str | None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "log": self.log,
            "params": [list(p) for p in self.params],
            "script": self.script,
        }


@dataclass(frozen=True)
class TargetWorkflow:
    snakefile: str
    config_yaml: str
    scripts: dict[str, str]
    layout: tuple[str, ...]
    rules: tuple[RuleSpec, ...]

    def to_dict(self) -> dict:
        return {
            "snakefile": self.snakefile,
            "config_yaml": self.config_yaml,
            "scripts": dict(sorted(self.scripts.items())),
            "layout": list(self.layout),
            "rules": [r.to_dict() for r in self.rules],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TargetWorkflow":
        return cls(
            snakefile=d["snakefile"],
            config_yaml=d["config_yaml"],
            scripts=dict(d["scripts"]),
            layout=tuple(d["layout"]),
            rules=tuple(
                RuleSpec(
                    name=r["name"],
                    inputs=tuple(r["inputs"]),
                    outputs=tuple(r["outputs"]),
                    log=r.get("log"),
                    params=tuple((a, b) for a, b in r.get("params", [])),
                    script=r.get("script"),
                )
                for r in d["rules"]
            ),
        )


@dataclass(frozen=True)
class StructuralFinding:
    kind: str
    message: str
    location: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "location": self.location}


# --------------------------------------------------------------------------
# Artifact planning


def _input_data_path(ir: WorkflowIR, port: str) -> str:
    if len(ir.inputs) > 1:
        return f"input/{port}.txt"
    return "input/input.txt"


def plan_artifacts(ir: WorkflowIR) -> dict[str, str]:
    """Map each step with functional consumers to its `results/*.json` file.

    The artifact is named after the data it carries: the consumer-side port
    of the step's first outgoing edge (matching how the datalinks name the
    exchanged values), uniquified across producers.
    """
    taken: set[str] = set()
    plan: dict[str, str] = {}
    for sid in topo_order(ir):
        step = ir.step(sid)
        if step.kind in (StepKind.SOURCE, StepKind.SINK):
            continue
        consumer_edges = sorted(
            (e for e in ir.out_edges(sid) if e.to_step != SINK_ID),
            key=lambda e: (e.to_step, e.to_port),
        )
        if not consumer_edges:
            continue
        name = unique_name(snake_case(consumer_edges[0].to_port), taken)
        taken.add(name)
        plan[sid] = f"results/{name}.json"
    return plan


# --------------------------------------------------------------------------
# Emission


_GLUE_PRELUDE = '''\
try:
    _smk = snakemake  # noqa: F821 - injected by the workflow engine
    _inputs = [str(p) for p in _smk.input]
    _outputs = [str(p) for p in _smk.output]
    _params = dict(_smk.params.items())
except NameError:
    _inputs = [p for p in os.environ.get('RULE_INPUTS', '').split(os.pathsep) if p]
    _outputs = [p for p in os.environ.get('RULE_OUTPUTS', '').split(os.pathsep) if p]
    _params = json.loads(os.environ.get('RULE_PARAMS', '{}'))


def load_value(path):
    if path.endswith('.json'):
        with open(path, 'r', encoding='utf-8') as fh:
            return json.load(fh)
    with open(path, 'r', encoding='utf-8') as fh:
        return fh.read()
'''


def emit_snakemake(script: PivotScript, ir: WorkflowIR) -> TargetWorkflow:
    """Transpile the pivot into a Snakefile plus per-rule scripts.

    Byte-deterministic for identical inputs. Raises EmissionImpossible for
    any function still carrying a curator-checkpoint marker.
    """
    for fn in script.functions:
        if NEEDS_CURATOR_MARKER in fn.body:
            raise EmissionImpossible(fn.step_id, "body still needs curator input")

    apis = api_map(ir)
    artifacts = plan_artifacts(ir)
    functional = [s for s in ir.functional_steps()]
    fn_by_step = {fn.step_id: fn for fn in script.functions}

    rules: list[RuleSpec] = [
        RuleSpec(name="all", inputs=('config["output"]',), outputs=(), log=None, params=(), script=None)
    ]
    scripts: dict[str, str] = {}
    config: dict[str, str] = {"output": script.config_output}

    for step in functional:
        fn = fn_by_step.get(step.id)
        if fn is None:
            raise EmissionImpossible(step.id, "no pivot function was synthesized for this step")
        in_paths: list[str] = []
        port_loaders: list[str] = []
        input_index = 0
        for port in step.in_ports:
            incoming = sorted(
                (e for e in ir.in_edges(step.id) if e.to_port == port),
                key=lambda e: (e.from_step, e.from_port),
            )
            loaded: list[str] = []
            for edge in incoming:
                if edge.from_step == SOURCE_ID:
                    path = _input_data_path(ir, edge.from_port)
                else:
                    path = artifacts.get(edge.from_step)
                    if path is None:
                        raise EmissionImpossible(step.id, f"no artifact for producer '{edge.from_step}'")
                in_paths.append(path)
                var = f"_v{input_index}"
                input_index += 1
                port_loaders.append(f"{var} = load_value(_inputs[{input_index - 1}])")
                if edge.adapter_script:
                    expr = transliterate_adapter(edge.adapter_script)
                    if expr is None:
                        raise EmissionImpossible(
                            step.id, f"adapter from '{edge.from_step}' is not translatable"
                        )
                    port_loaders.append(f"{var} = [{expr} for _item in as_items({var})]")
                loaded.append(var)
            if not loaded:
                port_loaders.append(f"_a{len(port_loaders)} = None")
                loaded.append(f"_a{len(port_loaders) - 1}")
            if len(loaded) == 1:
                port_loaders.append(f"_args.append({loaded[0]})")
            else:
                merged = " + ".join(f"as_items({v})" for v in loaded)
                port_loaders.append(f"_args.append({merged})")

        outputs: list[str] = []
        if step.id in artifacts:
            outputs.append(artifacts[step.id])
        if any(e.to_step == SINK_ID for e in ir.out_edges(step.id)):
            outputs.append('config["output"]')
        if not outputs:
            outputs.append(f"results/{step.id}.json")

        sink_adapters = [
            e for e in sorted(ir.out_edges(step.id), key=lambda e: (e.to_step, e.to_port))
            if e.to_step == SINK_ID and e.adapter_script
        ]
        result_lines = [f"_result = {fn.name}(*_args)"]
        for edge in sink_adapters:
            expr = transliterate_adapter(edge.adapter_script)
            if expr is None:
                raise EmissionImpossible(step.id, "final adapter is not translatable")
            result_lines.append(f"_result = [{expr} for _item in as_items(_result)]")

        params: list[tuple[str, str]] = []
        if step.id in apis:
            api_name = apis[step.id][0]
            params.append((f"{api_name}_api", f'config["{api_name}_api"]'))
            config[f"{api_name}_api"] = dict(script.apis)[api_name]

        script_path = f"scripts/{step.id}.py"
        scripts[f"{step.id}.py"] = _render_rule_script(step.id, fn, params, port_loaders, result_lines)
        rules.append(
            RuleSpec(
                name=step.id,
                inputs=tuple(in_paths),
                outputs=tuple(outputs),
                log=f"logs/{step.id}.log",
                params=tuple(params),
                script=script_path,
            )
        )

    snakefile = _render_snakefile(rules)
    config_yaml = yaml.safe_dump(config, default_flow_style=False, sort_keys=True)
    layout = ("Snakefile", "config.yaml") + tuple(sorted(f"scripts/{n}" for n in scripts))
    return TargetWorkflow(
        snakefile=snakefile,
        config_yaml=config_yaml,
        scripts=scripts,
        layout=layout,
        rules=tuple(rules),
    )


def _render_rule_script(
    step_id: str,
    fn: PivotFunction,
    params: list[tuple[str, str]],
    port_loaders: list[str],
    result_lines: list[str],
) -> str:
    api_entries = ", ".join(
        f"{name[: -len('_api')]!r}: _params.get({name!r}, '')" for name, _ in params
    )
    parts = [
        f'"""Rule script for workflow step {step_id!r} (generated)."""',
        "import json\nimport os\nimport sys",
        _GLUE_PRELUDE.rstrip(),
        f"CONFIG = {{'apis': {{{api_entries}}}}}",
        HELPER_BLOCK,
        render_function(fn, f" Rule: {step_id}"),
        "_args = []\n" + "\n".join(port_loaders),
        "\n".join(result_lines),
        "for _path in _outputs:\n    write_json(_path, _result)",
    ]
    return "\n\n".join(parts) + "\n"


def _render_snakefile(rules: list[RuleSpec]) -> str:
    blocks = [
        'configfile: "config.yaml"',
        "",
        "import os",
        "",
        'os.makedirs("results", exist_ok=True)',
        'os.makedirs("logs", exist_ok=True)',
        "",
    ]
    for rule in rules:
        blocks.append("")
        blocks.append(f"rule {rule.name}:")
        if rule.inputs:
            blocks.append(f"    input: {', '.join(_token(t) for t in rule.inputs)}")
        if rule.outputs:
            blocks.append(f"    output: {', '.join(_token(t) for t in rule.outputs)}")
        if rule.log:
            blocks.append(f"    log: {_token(rule.log)}")
        if rule.params:
            entries = ", ".join(f"{name}={value}" for name, value in rule.params)
            blocks.append(f"    params: {entries}")
        if rule.script:
            blocks.append(f"    script: {_token(rule.script)}")
    return "\n".join(blocks) + "\n"


def _token(value: str) -> str:
    if value.startswith("config["):
        return value
    return f'"{value}"'


# --------------------------------------------------------------------------
# Mini Snakefile reader

_RULE_RE = re.compile(r"^rule\s+(\w+)\s*:\s*$")
_FIELD_RE = re.compile(r"^\s+(input|output|log|params|script)\s*:\s*(.+?)\s*$")


def read_rules(snakefile: str) -> list[RuleSpec]:
    """Re-parse an emitted Snakefile's rules (names, files, params)."""
    rules: list[RuleSpec] = []
    current: dict | None = None

    def flush() -> None:
        nonlocal current
        if current is not None:
            rules.append(
                RuleSpec(
                    name=current["name"],
                    inputs=tuple(current.get("input", ())),
                    outputs=tuple(current.get("output", ())),
                    log=(current.get("log") or (None,))[0],
                    params=tuple(current.get("params", ())),
                    script=(current.get("script") or (None,))[0],
                )
            )
        current = None

    for line in snakefile.splitlines():
        rule_match = _RULE_RE.match(line.strip()) if not line.startswith(" ") else None
        if rule_match:
            flush()
            current = {"name": rule_match.group(1)}
            continue
        if current is None:
            continue
        field_match = _FIELD_RE.match(line)
        if not field_match:
            continue
        field, raw = field_match.group(1), field_match.group(2)
        tokens = _split_top_level(raw)
        if field == "params":
            pairs = []
            for token in tokens:
                name, _, value = token.partition("=")
                pairs.append((name.strip(), value.strip()))
            current["params"] = pairs
        else:
            current[field] = [_untoken(t) for t in tokens]
    flush()
    return rules


def _split_top_level(raw: str) -> list[str]:
    parts, depth, quote, start = [], 0, None, 0
    for i, ch in enumerate(raw):
        if quote:
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(raw[start:i].strip())
            start = i + 1
    tail = raw[start:].strip()
    if tail:
        parts.append(tail)
    return parts


def _untoken(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] in "\"'" and token[-1] == token[0]:
        return token[1:-1]
    return token


# --------------------------------------------------------------------------
# Structural checking


def _resolve(token: str, config: dict, findings: list[StructuralFinding], where: str) -> str | None:
    match = re.fullmatch(r'config\["([^"]+)"\]', token)
    if not match:
        return token
    key = match.group(1)
    if key not in config:
        findings.append(
            StructuralFinding("undefined-config-key", f'config key "{key}" is not defined', where)
        )
        return None
    return str(config[key])


def check_target(tw: TargetWorkflow) -> list[StructuralFinding]:
    """Structural soundness: references, cycles, reachability, config keys."""
    findings: list[StructuralFinding] = []
    config = yaml.safe_load(tw.config_yaml) or {}
    rules = read_rules(tw.snakefile)
    by_name = {r.name: r for r in rules}

    producers: dict[str, str] = {}
    for rule in rules:
        for out in rule.outputs:
            resolved = _resolve(out, config, findings, rule.name)
            if resolved:
                producers[resolved] = rule.name

    graph: dict[str, set[str]] = {r.name: set() for r in rules}
    for rule in rules:
        for name, value in rule.params:
            _resolve(value, config, findings, f"{rule.name}.params.{name}")
        if rule.script and rule.script not in {f"scripts/{n}" for n in tw.scripts}:
            findings.append(
                StructuralFinding("missing-script", f"script '{rule.script}' is not in the bundle", rule.name)
            )
        for token in rule.inputs:
            resolved = _resolve(token, config, findings, rule.name)
            if resolved is None:
                continue
            producer = producers.get(resolved)
            if producer:
                graph[rule.name].add(producer)
            elif not (resolved.startswith("input/") or resolved.startswith("data/")):
                findings.append(
                    StructuralFinding(
                        "dangling-reference",
                        f"input '{resolved}' is produced by no rule and is not sample data",
                        rule.name,
                    )
                )

    # cycle check over the rule dependency graph
    seen: dict[str, int] = {}

    def visit(node: str, stack: tuple[str, ...]) -> None:
        state = seen.get(node, 0)
        if state == 1:
            findings.append(
                StructuralFinding("cycle", f"rule dependencies form a cycle at '{node}'", node)
            )
            return
        if state == 2:
            return
        seen[node] = 1
        for dep in sorted(graph.get(node, ())):
            visit(dep, stack + (node,))
        seen[node] = 2

    for name in sorted(graph):
        visit(name, ())

    if "all" in by_name:
        reachable: set[str] = set()
        frontier = ["all"]
        while frontier:
            node = frontier.pop()
            if node in reachable:
                continue
            reachable.add(node)
            frontier.extend(graph.get(node, ()))
        for rule in rules:
            if rule.name not in reachable:
                findings.append(
                    StructuralFinding(
                        "unreachable-rule", f"rule '{rule.name}' is never required by 'all'", rule.name
                    )
                )
    else:
        findings.append(StructuralFinding("missing-all", "no 'all' rule present", "Snakefile"))

    return findings


# --------------------------------------------------------------------------
# Materialization and local execution


def materialize(tw: TargetWorkflow, directory: str | Path) -> Path:
    """Write the target workflow tree to disk."""
    root = Path(directory)
    (root / "scripts").mkdir(parents=True, exist_ok=True)
    (root / "Snakefile").write_text(tw.snakefile, encoding="utf-8")
    (root / "config.yaml").write_text(tw.config_yaml, encoding="utf-8")
    for name, content in tw.scripts.items():
        (root / "scripts" / name).write_text(content, encoding="utf-8")
    return root


def run_target(
    tw: TargetWorkflow,
    workdir: str | Path,
    env_extra: dict[str, str] | None = None,
    time_budget_s: int = 600,
) -> dict[str, str]:
    """Execute the emitted rules locally in dependency order.

    A stand-in for invoking Snakemake itself: each rule script runs as a
    subprocess with its inputs/outputs/params passed through the documented
    environment protocol. Returns {rule name: output path written}.
    """
    root = materialize(tw, workdir)
    (root / "results").mkdir(exist_ok=True)
    (root / "logs").mkdir(exist_ok=True)
    config = yaml.safe_load(tw.config_yaml) or {}

    def resolve(token: str) -> str:
        match = re.fullmatch(r'config\["([^"]+)"\]', token)
        if match:
            return str(config[match.group(1)])
        return token

    producers = {}
    for rule in tw.rules:
        for out in rule.outputs:
            producers[resolve(out)] = rule.name
    graph: dict[str, set[str]] = {}
    for rule in tw.rules:
        if rule.name == "all":
            continue
        deps = set()
        for token in rule.inputs:
            dep = producers.get(resolve(token))
            if dep and dep != rule.name:
                deps.add(dep)
        graph[rule.name] = deps

    ordered: list[str] = []
    marked: set[str] = set()

    def add(node: str) -> None:
        if node in marked:
            return
        marked.add(node)
        for dep in sorted(graph.get(node, ())):
            add(dep)
        ordered.append(node)

    for name in sorted(graph):
        add(name)

    env = {name: value for name, value in os.environ.items() if name in ("PATH", "LANG", "LC_ALL")}
    env.update(env_extra or {})
    written: dict[str, str] = {}
    by_name = {r.name: r for r in tw.rules}
    for name in ordered:
        rule = by_name[name]
        rule_env = dict(env)
        rule_env["RULE_INPUTS"] = os.pathsep.join(resolve(t) for t in rule.inputs)
        rule_env["RULE_OUTPUTS"] = os.pathsep.join(resolve(t) for t in rule.outputs)
        rule_env["RULE_PARAMS"] = json.dumps(
            {pname: resolve(value) for pname, value in rule.params}, sort_keys=True
        )
        proc = subprocess.run(
            [sys.executable, rule.script],
            cwd=root,
            env=rule_env,
            capture_output=True,
            text=True,
            timeout=time_budget_s,
        )
        log_path = root / (rule.log or f"logs/{name}.log")
        log_path.parent.mkdir(parents=True, exist_ok=True)
        log_path.write_text(proc.stdout + proc.stderr, encoding="utf-8")
        if proc.returncode != 0:
            raise RuntimeError(f"rule '{name}' failed: {proc.stderr.strip()[-400:]}")
        written[name] = resolve(rule.outputs[0]) if rule.outputs else ""
    return written
