"""Tests for Snakemake emission, the mini reader, and structural checking."""

from __future__ import annotations

import json
from dataclasses import replace

import pytest

from tests.conftest import KEGG_HTTP
from wfrevive.errors import EmissionImpossible
from wfrevive.emitter import (
    RuleSpec,
    check_target,
    emit_snakemake,
    plan_artifacts,
    read_rules,
    run_target,
)
from wfrevive.ir import Edge, IRInput, Step, StepKind, WorkflowIR
from wfrevive.synthesis import DeterministicProvider, build_skeleton, populate_bodies

LISTING_BLOCK = """rule convert_to_kegg_ids:
    input: "results/prefixed_ids.json"
    output: "results/kegg_id_mapping.json"
    log: "logs/convert_to_kegg_ids.log"
    params: kegg_api=config["kegg_api"]
    script: "scripts/convert_to_kegg_ids.py"
"""


@pytest.fixture
def kegg_target(kegg_pivot, kegg_substituted):
    ir, _ = kegg_substituted
    return emit_snakemake(kegg_pivot, ir)


class TestEmitKegg:
    def test_rule_names(self, kegg_target):
        assert [r.name for r in kegg_target.rules] == [
            "all",
            "read_gene_ids",
            "convert_to_kegg_ids",
            "get_pathways_for_genes",
        ]

    def test_convert_rule_block_matches_published_shape(self, kegg_target):
        assert LISTING_BLOCK in kegg_target.snakefile

    def test_config_holds_output_and_api(self, kegg_target):
        import yaml

        config = yaml.safe_load(kegg_target.config_yaml)
        assert config == {"output": "results/output.json", "kegg_api": "https://rest.kegg.jp"}

    def test_scripts_exist_for_every_rule(self, kegg_target):
        for rule in kegg_target.rules:
            if rule.script:
                assert rule.script.split("/", 1)[1] in kegg_target.scripts

    def test_structurally_sound(self, kegg_target):
        assert check_target(kegg_target) == []

    def test_emission_is_deterministic(self, kegg_pivot, kegg_substituted):
        ir, _ = kegg_substituted
        one = emit_snakemake(kegg_pivot, ir)
        two = emit_snakemake(kegg_pivot, ir)
        assert one == two

    def test_rule_graph_isomorphic_to_functional_ir(self, kegg_target, kegg_substituted):
        """Oracle: rebuild both graphs independently and compare edge sets."""
        ir, _ = kegg_substituted
        ir_edges = {
            (e.from_step, e.to_step)
            for e in ir.edges
            if e.from_step not in ("source", "sink") and e.to_step not in ("source", "sink")
        }
        producers = {}
        for rule in kegg_target.rules:
            for out in rule.outputs:
                producers[out] = rule.name
        rule_edges = set()
        for rule in kegg_target.rules:
            if rule.name == "all":
                continue
            for inp in rule.inputs:
                if inp in producers:
                    rule_edges.add((producers[inp], rule.name))
        assert rule_edges == ir_edges

    def test_marker_body_blocks_emission(self, kegg_pivot, kegg_substituted):
        ir, _ = kegg_substituted
        broken = replace(
            kegg_pivot,
            functions=tuple(
                replace(fn, body="raise RuntimeError('NEEDS_CURATOR: step x')")
                if fn.step_id == "convert_to_kegg_ids"
                else fn
                for fn in kegg_pivot.functions
            ),
        )
        with pytest.raises(EmissionImpossible) as err:
            emit_snakemake(broken, ir)
        assert err.value.step_id == "convert_to_kegg_ids"


class TestSingleStepEmission:
    def test_minimal_workflow_emits_all_plus_step(self):
        steps = (
            Step(id="source", kind=StepKind.SOURCE, summary="", out_ports=("text",)),
            Step(
                id="emit_upper",
                kind=StepKind.LOCAL_COMPUTE,
                summary="",
                script_text="out = text.toUpperCase();",
                in_ports=("text",),
                out_ports=("upper",),
            ),
            Step(id="sink", kind=StepKind.SINK, summary="", in_ports=("result",)),
        )
        edges = (
            Edge("source", "text", "emit_upper", "text"),
            Edge("emit_upper", "upper", "sink", "result"),
        )
        ir = WorkflowIR("tiny", "0" * 64, steps, edges, (IRInput("text", "hi"),), ("result",))
        script = populate_bodies(build_skeleton(ir), ir, DeterministicProvider())
        tw = emit_snakemake(script, ir)
        assert [r.name for r in tw.rules] == ["all", "emit_upper"]
        assert check_target(tw) == []


class TestReader:
    def test_reader_reproduces_emitted_rules(self, kegg_target):
        assert read_rules(kegg_target.snakefile) == list(kegg_target.rules)

    def test_reader_handles_params_and_config_refs(self):
        rules = read_rules(LISTING_BLOCK)
        assert rules == [
            RuleSpec(
                name="convert_to_kegg_ids",
                inputs=("results/prefixed_ids.json",),
                outputs=("results/kegg_id_mapping.json",),
                log="logs/convert_to_kegg_ids.log",
                params=(("kegg_api", 'config["kegg_api"]'),),
                script="scripts/convert_to_kegg_ids.py",
            )
        ]


class TestCheckTarget:
    def test_dangling_reference_found(self, kegg_target):
        broken = replace(
            kegg_target,
            snakefile=kegg_target.snakefile.replace(
                '"results/prefixed_ids.json"', '"results/missing.json"', 1
            ),
        )
        findings = check_target(broken)
        assert any(f.kind == "dangling-reference" for f in findings)

    def test_cycle_found(self):
        snakefile = (
            'rule all:\n    input: config["output"]\n'
            "rule a:\n"
            '    input: "results/b.json"\n'
            '    output: "results/a.json"\n'
            '    log: "logs/a.log"\n'
            '    script: "scripts/a.py"\n'
            "rule b:\n"
            '    input: "results/a.json"\n'
            '    output: config["output"], "results/b.json"\n'
            '    log: "logs/b.log"\n'
            '    script: "scripts/b.py"\n'
        )
        from wfrevive.emitter import TargetWorkflow

        tw = TargetWorkflow(
            snakefile=snakefile,
            config_yaml="output: results/out.json\n",
            scripts={"a.py": "", "b.py": ""},
            layout=(),
            rules=tuple(read_rules(snakefile)),
        )
        findings = check_target(tw)
        assert any(f.kind == "cycle" for f in findings)

    def test_undefined_config_key_found(self, kegg_target):
        broken = replace(kegg_target, config_yaml="output: results/output.json\n")
        findings = check_target(broken)
        assert any(f.kind == "undefined-config-key" for f in findings)

    def test_unreachable_rule_found(self, kegg_target):
        extra = (
            "\nrule stray:\n"
            '    input: "input/input.txt"\n'
            '    output: "results/stray.json"\n'
            '    log: "logs/stray.log"\n'
            '    script: "scripts/stray.py"\n'
        )
        broken = replace(
            kegg_target,
            snakefile=kegg_target.snakefile + extra,
            scripts={**kegg_target.scripts, "stray.py": ""},
        )
        findings = check_target(broken)
        assert any(f.kind == "unreachable-rule" and f.location == "stray" for f in findings)


class TestRunTarget:
    def test_kegg_target_executes_locally(self, tmp_path, kegg_target):
        work = tmp_path / "target"
        (work / "input").mkdir(parents=True)
        (work / "input" / "input.txt").write_text("7124\n")
        env = {"WORKFLOW_HTTP_FIXTURES": str(KEGG_HTTP.resolve())}
        written = run_target(kegg_target, work, env_extra=env)
        assert written["get_pathways_for_genes"] == "results/output.json"
        output = json.loads((work / "results" / "output.json").read_text())
        assert "hsa05134" in output


class TestArtifactPlan:
    def test_kegg_artifacts_named_after_data(self, kegg_substituted):
        ir, _ = kegg_substituted
        plan = plan_artifacts(ir)
        assert plan == {
            "read_gene_ids": "results/prefixed_ids.json",
            "convert_to_kegg_ids": "results/kegg_id_mapping.json",
        }
