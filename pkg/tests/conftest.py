"""Shared fixtures: the KEGG revival corpus and recorded HTTP responses."""

from __future__ import annotations

from pathlib import Path

import pytest

from wfrevive.ir import collapse_shims, detect_shims, lower
from wfrevive.legacy import parse_legacy
from wfrevive.services import FixtureTransport

FIXTURES = Path(__file__).parent / "fixtures"
KEGG_T2FLOW = FIXTURES / "entrez_gene_to_kegg_pathway.t2flow"
KEGG_HTTP = FIXTURES / "http" / "kegg.json"
PDB_SCUFL = FIXTURES / "fetch_pdb_flatfile.xml"


@pytest.fixture
def kegg_bytes() -> bytes:
    return KEGG_T2FLOW.read_bytes()


@pytest.fixture
def kegg_workflow(kegg_bytes):
    return parse_legacy(kegg_bytes)


@pytest.fixture
def kegg_ir(kegg_workflow):
    """Lowered IR with shims detected but not collapsed."""
    return detect_shims(lower(kegg_workflow))


@pytest.fixture
def kegg_collapsed(kegg_ir):
    """(IR, collapse records) after shim folding."""
    return collapse_shims(kegg_ir)


@pytest.fixture
def kegg_transport() -> FixtureTransport:
    return FixtureTransport.from_path(KEGG_HTTP)


@pytest.fixture
def kegg_pivot(kegg_substituted):
    """Fully populated pivot script for the KEGG fixture."""
    from wfrevive.synthesis import DeterministicProvider, build_skeleton, populate_bodies

    ir, adapters = kegg_substituted
    skeleton = build_skeleton(ir, original_format="t2flow")
    return populate_bodies(skeleton, ir, DeterministicProvider(adapters))


@pytest.fixture
def kegg_substituted(kegg_collapsed, kegg_transport):
    """(IR with REST endpoints, step->ResponseAdapter) after substitution."""
    from dataclasses import replace

    from wfrevive.ir import StepKind
    from wfrevive.services import KnowledgeBase, Protocol, builtin_rules, probe

    ir, _ = kegg_collapsed
    kb = KnowledgeBase()
    for rule in builtin_rules():
        kb.add_rule(rule)
    adapters = {}
    steps = []
    for step in ir.steps:
        if step.kind is StepKind.SERVICE_CALL and step.endpoint.protocol is Protocol.SOAP:
            rule = kb.lookup(step.endpoint)[0]
            assert probe(rule.probe_url(), kegg_transport).ok
            step = replace(step, endpoint=rule.replacement)
            adapters[step.id] = rule.response_adapter
        steps.append(step)
    return replace(ir, steps=tuple(steps)), adapters
