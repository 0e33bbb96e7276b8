"""Tests for the revival state machine, checkpoints, and replay."""

from __future__ import annotations

import json

import pytest

from tests.conftest import KEGG_HTTP, KEGG_T2FLOW
from wfrevive.errors import Blocked, MalformedXml, TerminalFailure
from wfrevive.services import (
    Protocol,
    ResponseAdapter,
    RuleMatch,
    ServiceEndpoint,
    SubstitutionRule,
    builtin_rules,
)
from wfrevive.session import (
    RevivalEngine,
    SessionConfig,
    SessionState,
)
from wfrevive.validation import CuratorAnswer, QuestionKind, TransportMode


@pytest.fixture
def engine(tmp_path) -> RevivalEngine:
    return RevivalEngine(tmp_path / "data")


@pytest.fixture
def kegg_config() -> SessionConfig:
    return SessionConfig(transport=TransportMode.FIXTURE, fixtures_path=str(KEGG_HTTP.resolve()))


WRONG_CONV_RULE = SubstitutionRule(
    rule_id="seed-wrong-conv-guess",
    match=RuleMatch("*genome.jp", "*conv*"),
    replacement=ServiceEndpoint(
        Protocol.REST, "https://rest.kegg.jp", "/convert_gene/genes/{source_id}", ("source_id",)
    ),
    response_adapter=ResponseAdapter.TAB_SEPARATED_PAIRS,
    probe_args=(("source_id", "ncbi-geneid:7124"),),
)


class TestCreate:
    def test_upload_creates_session(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        assert session.state is SessionState.UPLOADED
        assert [e["event"] for e in session.events] == ["created"]
        assert session.transcript_path.exists()

    def test_duplicate_uploads_get_distinct_ids(self, engine, kegg_bytes, kegg_config):
        a = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        b = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        assert a.id != b.id

    def test_empty_upload_fails_on_advance(self, engine, kegg_config):
        session = engine.create(b"", "empty.t2flow", kegg_config)
        with pytest.raises(TerminalFailure) as err:
            engine.advance(session)
        assert isinstance(err.value.cause, MalformedXml)
        assert session.state is SessionState.FAILED


class TestAdvance:
    def test_single_transitions_in_order(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        seen = [session.state]
        for _ in range(6):
            engine.advance(session)
            seen.append(session.state)
        assert seen == [
            SessionState.UPLOADED,
            SessionState.PARSED,
            SessionState.LOWERED,
            SessionState.SUBSTITUTED,
            SessionState.SYNTHESIZED,
            SessionState.VALIDATED,
            SessionState.EMITTED,
        ]

    def test_advance_on_packaged_is_noop(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        assert session.state is SessionState.PACKAGED
        events_before = len(session.events)
        engine.advance(session)
        assert session.state is SessionState.PACKAGED
        assert session.events[events_before]["event"] == "note"

    def test_packaging_blocked_until_plausibility_answered(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        for _ in range(6):
            engine.advance(session)
        assert session.state is SessionState.EMITTED
        with pytest.raises(Blocked):
            engine.advance(session)

    def test_no_stage_skipped_in_transcript(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        stages = [e["to"] for e in session.events if e["event"] == "stage"]
        assert stages == [
            "Parsed",
            "Lowered",
            "Substituted",
            "Synthesized",
            "Validated",
            "Emitted",
            "Packaged",
        ]


class TestKeggRunToCompletion:
    def test_reaches_packaged_with_one_plausibility_question(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        assert session.state is SessionState.PACKAGED
        opened = [e["question"]["kind"] for e in session.events if e["event"] == "question_opened"]
        assert opened == ["plausibility_check"]

    def test_default_deny_blocks_at_plausibility(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session)
        assert session.state is SessionState.EMITTED
        assert [q.kind for q in session.open_questions] == [QuestionKind.PLAUSIBILITY_CHECK]

    def test_plausibility_no_rejects_revival(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "no"})
        assert session.state is SessionState.FAILED
        assert "implausible" in session.failure_cause

    def test_substitutions_cover_all_service_steps(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        from wfrevive.ir import StepKind

        service_steps = {s.id for s in session.ir.functional_steps() if s.kind is StepKind.SERVICE_CALL}
        assert {r.step_id for r in session.substitutions} == service_steps

    def test_knowledge_base_persists_ledger_and_snapshot(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        kb_dir = engine.data_dir / "kb"
        assert (kb_dir / "rules.jsonl").exists()
        assert (kb_dir / "snapshot.json").exists()
        snapshot = json.loads((kb_dir / "snapshot.json").read_text())
        assert any(r["confidence"] == "confirmed" for r in snapshot["rules"])

    def test_unknown_service_blocks(self, engine, kegg_bytes):
        config = SessionConfig(
            transport=TransportMode.FIXTURE,
            fixtures_path=str(KEGG_HTTP.resolve()),
            use_builtin_rules=False,
        )
        session = engine.create(kegg_bytes, "kegg.t2flow", config)
        engine.run_to_completion(session)
        assert session.state is SessionState.LOWERED
        kinds = {q.kind for q in session.open_questions}
        assert kinds == {QuestionKind.ENDPOINT_BROKEN}


class TestSubstitutionFailureMode:
    """The published wrong-route trace: /convert_gene 404s, /conv works."""

    def config(self) -> SessionConfig:
        pathway = next(r for r in builtin_rules() if r.rule_id == "kegg-pathway-rest")
        return SessionConfig(
            transport=TransportMode.FIXTURE,
            fixtures_path=str(KEGG_HTTP.resolve()),
            use_builtin_rules=False,
            seed_rules=(WRONG_CONV_RULE.to_dict(), pathway.to_dict()),
        )

    def test_exactly_one_endpoint_broken_question_then_completion(self, engine, kegg_bytes):
        session = engine.create(kegg_bytes, "kegg.t2flow", self.config())
        engine.run_to_completion(session)
        broken = [q for q in session.open_questions if q.kind is QuestionKind.ENDPOINT_BROKEN]
        assert len(broken) == 1
        assert broken[0].linked_step == "convert_to_kegg_ids"

        probes = [e for e in session.events if e["event"] == "probe"]
        assert any("/convert_gene/" in e["url"] and e["code"] == 404 for e in probes)

        engine.apply_answer(session, CuratorAnswer(broken[0].id, "use https://rest.kegg.jp/conv"))
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        assert session.state is SessionState.PACKAGED

        asked = [
            e
            for e in session.events
            if e["event"] == "question_opened" and e["question"]["kind"] == "endpoint_broken"
        ]
        assert len(asked) == 1
        record = next(r for r in session.substitutions if r.step_id == "convert_to_kegg_ids")
        assert record.decided_by == "curator"
        assert record.to_endpoint.operation == "/conv/genes/{source_id}"


class TestBoundedResynthesis:
    class AlwaysFailingProvider:
        capabilities = frozenset()

        def fill_body(self, request, *, step, ir):
            return "this is not (valid python"

        def summarize(self, step):
            return "A step."

        def suggest_substitution(self, endpoint):
            return None

    def test_three_attempts_then_permanently_blocked(self, engine, kegg_bytes):
        engine.extra_providers["failing"] = self.AlwaysFailingProvider()
        config = SessionConfig(
            transport=TransportMode.FIXTURE,
            fixtures_path=str(KEGG_HTTP.resolve()),
            provider="failing",
        )
        session = engine.create(kegg_bytes, "kegg.t2flow", config)
        engine.run_to_completion(session, {"opaque_step": "please rebuild it"})
        assert session.state is not SessionState.PACKAGED
        assert session.open_questions, "expected a standing curator question"
        assert max(session.synth_attempts.values()) == 3
        assert all(count <= 3 for count in session.synth_attempts.values())


class TestReplay:
    def test_replay_reproduces_snapshot_and_bundle(self, engine, kegg_bytes, kegg_config, tmp_path):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config, session_id="replayable1")
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        assert session.state is SessionState.PACKAGED

        replayed = engine.replay(
            session.transcript_path,
            session.dir / "original" / "kegg.t2flow",
            tmp_path / "replay-data",
        )
        assert replayed.state is SessionState.PACKAGED
        original = json.dumps(session.to_snapshot(strip_volatile=True), sort_keys=True)
        again = json.dumps(replayed.to_snapshot(strip_volatile=True), sort_keys=True)
        assert original == again

        files_a = {
            str(p.relative_to(session.bundle_dir)): p.read_bytes()
            for p in sorted(session.bundle_dir.rglob("*"))
            if p.is_file()
        }
        files_b = {
            str(p.relative_to(replayed.bundle_dir)): p.read_bytes()
            for p in sorted(replayed.bundle_dir.rglob("*"))
            if p.is_file()
        }
        assert files_a.keys() == files_b.keys()
        for rel in files_a:
            if rel == "manifest.json":
                a, b = json.loads(files_a[rel]), json.loads(files_b[rel])
                a["revived"].pop("emitted_at")
                b["revived"].pop("emitted_at")
                assert a == b
            else:
                assert files_a[rel] == files_b[rel], rel

    def test_transcript_is_append_only_and_ordered(self, engine, kegg_bytes, kegg_config):
        session = engine.create(kegg_bytes, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        lines = session.transcript_path.read_text().splitlines()
        seqs = [json.loads(l)["seq"] for l in lines]
        assert seqs == list(range(len(lines)))


class TestMissingInputCheckpoint:
    def test_workflow_without_sample_data_asks_for_input(self, engine, kegg_bytes, kegg_config):
        stripped = kegg_bytes.replace(
            b'<annotation class="net.sf.taverna.t2.annotation.annotationbeans.ExampleValue">', b"<x>"
        ).replace(b"</annotation>", b"</x>")
        session = engine.create(stripped, "kegg.t2flow", kegg_config)
        engine.run_to_completion(session)
        assert [q.kind for q in session.open_questions] == [QuestionKind.MISSING_INPUT]
        question = session.open_questions[0]
        engine.apply_answer(
            session,
            CuratorAnswer(question.id, {"filename": "input.txt", "content": "7124"}),
        )
        engine.run_to_completion(session, {"plausibility_check": "yes"})
        assert session.state is SessionState.PACKAGED
