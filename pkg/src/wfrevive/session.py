"""The revival state machine and its event-sourced persistence.

A session carries one uploaded workflow through
Uploaded -> Parsed -> Lowered -> Substituted -> Synthesized -> Validated
-> Emitted -> Packaged, pausing with queued curator questions whenever a
stage cannot decide on its own. Failed is reachable from anywhere. Every
decision appends to a per-session transcript (JSON lines), and replaying a
transcript against a fresh engine reproduces the same final state.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping

from ._util import iso_utc, pretty_json, sha256_hex
from .bundle import build_bundle
from .emitter import TargetWorkflow, check_target, emit_snakemake
from .errors import (
    AnswerShapeMismatch,
    Blocked,
    RevivalError,
    TerminalFailure,
    UnknownQuestion,
)
from .ir import StepKind, WorkflowIR, collapse_shims, detect_shims, lower
from .legacy import LegacyWorkflow, lint_legacy, parse_legacy
from .services import (
    Confidence,
    FixtureTransport,
    KnowledgeBase,
    LiveTransport,
    Protocol,
    ResponseAdapter,
    RuleMatch,
    RuleProvenance,
    ServiceEndpoint,
    SubstitutionRule,
    builtin_rules,
    identity_rule,
    probe,
)
from .synthesis import (
    DeterministicProvider,
    PivotScript,
    RemoteProvider,
    build_skeleton,
    populate_bodies,
    summarize_step,
)
from .validation import (
    CuratorAnswer,
    CuratorQuestion,
    ExecutionReport,
    QuestionKind,
    SandboxConfig,
    SessionEffect,
    TransportMode,
    apply_answer,
    diagnose,
    execute,
)

MAX_SYNTHESIS_ATTEMPTS = 3
MAX_RUN_ITERATIONS = 200


class SessionState(str, Enum):
    UPLOADED = "Uploaded"
    PARSED = "Parsed"
    LOWERED = "Lowered"
    SUBSTITUTED = "Substituted"
    SYNTHESIZED = "Synthesized"
    VALIDATED = "Validated"
    EMITTED = "Emitted"
    PACKAGED = "Packaged"
    FAILED = "Failed"


_LINEAR_ORDER = [
    SessionState.UPLOADED,
    SessionState.PARSED,
    SessionState.LOWERED,
    SessionState.SUBSTITUTED,
    SessionState.SYNTHESIZED,
    SessionState.VALIDATED,
    SessionState.EMITTED,
    SessionState.PACKAGED,
]


@dataclass(frozen=True)
class SessionConfig:
    transport: TransportMode = TransportMode.FIXTURE
    fixtures_path: str | None = None
    provider: str = "deterministic"
    provider_endpoint: str | None = None
    time_budget_s: int = 600
    use_builtin_rules: bool = True
    seed_rules: tuple[dict, ...] = ()
    target: str = "snakemake"
    max_synthesis_attempts: int = MAX_SYNTHESIS_ATTEMPTS

    def to_dict(self) -> dict:
        return {
            "transport": self.transport.value,
            "fixtures_path": self.fixtures_path,
            "provider": self.provider,
            "provider_endpoint": self.provider_endpoint,
            "time_budget_s": self.time_budget_s,
            "use_builtin_rules": self.use_builtin_rules,
            "seed_rules": [dict(r) for r in self.seed_rules],
            "target": self.target,
            "max_synthesis_attempts": self.max_synthesis_attempts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(
            transport=TransportMode(d.get("transport", "fixture")),
            fixtures_path=d.get("fixtures_path"),
            provider=d.get("provider", "deterministic"),
            provider_endpoint=d.get("provider_endpoint"),
            time_budget_s=int(d.get("time_budget_s", 600)),
            use_builtin_rules=bool(d.get("use_builtin_rules", True)),
            seed_rules=tuple(d.get("seed_rules", ())),
            target=d.get("target", "snakemake"),
            max_synthesis_attempts=int(d.get("max_synthesis_attempts", MAX_SYNTHESIS_ATTEMPTS)),
        )


@dataclass(frozen=True)
class SubstitutionRecord:
    step_id: str
    from_endpoint: ServiceEndpoint
    to_endpoint: ServiceEndpoint
    decided_by: str  # builtin | learned | curator
    response_adapter: ResponseAdapter
    rule_id: str

    def to_dict(self) -> dict:
        return {
            "step_id": self.step_id,
            "from_endpoint": self.from_endpoint.to_dict(),
            "to_endpoint": self.to_endpoint.to_dict(),
            "decided_by": self.decided_by,
            "response_adapter": self.response_adapter.value,
            "rule_id": self.rule_id,
        }


_DECIDED_BY = {
    RuleProvenance.BUILTIN: "builtin",
    RuleProvenance.LEARNED: "learned",
    RuleProvenance.CURATOR_PROVIDED: "curator",
}


class RevivalSession:
    """Mutable state for one revival; owned by a single engine writer."""

    def __init__(self, session_id: str, directory: Path, config: SessionConfig,
                 original_filename: str, original_bytes: bytes):
        self.id = session_id
        self.dir = directory
        self.config = config
        self._engine: "RevivalEngine | None" = None
        self.original_filename = original_filename
        self.original_bytes = original_bytes
        self.state = SessionState.UPLOADED
        self.legacy: LegacyWorkflow | None = None
        self.ir: WorkflowIR | None = None
        self.collapse_records: list = []
        self.pivot: PivotScript | None = None
        self.target: TargetWorkflow | None = None
        self.open_questions: list[CuratorQuestion] = []
        self.closed_questions: list[tuple[CuratorQuestion, Any]] = []
        self.substitutions: list[SubstitutionRecord] = []
        self.approved_steps: set[str] = set()
        self.input_files: dict[str, str] = {}
        self.guidance: dict[str, str] = {}
        self.synth_attempts: dict[str, int] = {}
        self.pending_resynth: set[str] = set()
        self.last_candidates: dict[str, SubstitutionRule] = {}
        self.reports: list[ExecutionReport] = []
        self.failure_cause: str | None = None
        self.question_serial = 0
        self.events: list[dict] = []

    # -- paths

    @property
    def bundle_dir(self) -> Path:
        return self.dir / "bundle"

    @property
    def transcript_path(self) -> Path:
        return self.dir / "transcript.jsonl"

    # -- question plumbing (used by validation.apply_answer)

    def find_open_question(self, question_id: str) -> CuratorQuestion | None:
        for q in self.open_questions:
            if q.id == question_id:
                return q
        return None

    def close_question(self, question_id: str, answer: CuratorAnswer) -> None:
        question = self.find_open_question(question_id)
        if question is None:
            raise UnknownQuestion(question_id)
        self.open_questions = [q for q in self.open_questions if q.id != question_id]
        self.closed_questions.append((question, answer.payload))

    def approve_step(self, step_id: str | None) -> None:
        if step_id:
            self.approved_steps.add(step_id)

    def reject_revival(self, reason: str) -> None:
        self.failure_cause = reason
        self.state = SessionState.FAILED

    def schedule_resynthesis(self, step_id: str | None) -> None:
        if not step_id:
            return
        attempts = self.synth_attempts.get(step_id, 0)
        if attempts >= self.config.max_synthesis_attempts:
            raise AnswerShapeMismatch(
                f"step '{step_id}' has exhausted its {self.config.max_synthesis_attempts} "
                "synthesis attempts; provide an implementation instead"
            )
        self.pending_resynth.add(step_id)

    def register_input(self, filename: str, content: str) -> None:
        self.input_files[filename] = content

    def record_guidance(self, step_id: str | None, text: str) -> None:
        if step_id:
            self.guidance[step_id] = text

    def add_curator_rule(self, step_id: str | None, url: str) -> SubstitutionRule:
        if self._engine is None:
            raise RuntimeError("session is not attached to an engine")
        return self._engine._add_curator_rule(self, step_id, url)

    # -- staged sample data

    def staged_inputs(self) -> dict[str, str]:
        """Relative path -> content for every sample input file."""
        if self.ir is None:
            return {}
        staged: dict[str, str] = {}
        multi = len(self.ir.inputs) > 1
        for inp in self.ir.inputs:
            rel = f"input/{inp.name}.txt" if multi else "input/input.txt"
            uploaded = self.input_files.get(f"{inp.name}.txt") or self.input_files.get("input.txt")
            content = uploaded if uploaded is not None else inp.sample_value
            if content is not None:
                staged[rel] = content if content.endswith("\n") else content + "\n"
        return staged

    # -- snapshots

    def to_snapshot(self, strip_volatile: bool = False) -> dict:
        snap = {
            "id": self.id,
            "state": self.state.value,
            "config": self.config.to_dict(),
            "original": {
                "filename": self.original_filename,
                "digest": sha256_hex(self.original_bytes),
            },
            "legacy": self.legacy.to_dict() if self.legacy else None,
            "ir": self.ir.to_dict() if self.ir else None,
            "collapse_records": [r.to_dict() for r in self.collapse_records],
            "pivot": self.pivot.to_dict() if self.pivot else None,
            "target": self.target.to_dict() if self.target else None,
            "open_questions": [q.to_dict() for q in self.open_questions],
            "closed_questions": [
                {"question": q.to_dict(), "answer": payload} for q, payload in self.closed_questions
            ],
            "substitutions": [r.to_dict() for r in self.substitutions],
            "approved_steps": sorted(self.approved_steps),
            "input_files": dict(sorted(self.input_files.items())),
            "guidance": dict(sorted(self.guidance.items())),
            "synth_attempts": dict(sorted(self.synth_attempts.items())),
            "pending_resynthesis": sorted(self.pending_resynth),
            "reports": [r.to_dict() for r in self.reports],
            "failure_cause": self.failure_cause,
            "question_serial": self.question_serial,
        }
        if strip_volatile:
            snap = _strip_volatile(snap)
        return snap


_PATH_IN_TRACE = re.compile(r"(?:/[\w.\-]+)+/(workflow\.py|input/[\w.\-]+)")


def _strip_volatile(value):
    if isinstance(value, dict):
        return {
            k: (0 if k in ("wall_time_ms", "latency_ms") else _strip_volatile(v))
            for k, v in value.items()
            if k not in ("probed_at", "emitted_at")
        }
    if isinstance(value, list):
        return [_strip_volatile(v) for v in value]
    if isinstance(value, str):
        return _PATH_IN_TRACE.sub(r"\1", value)
    return value


AnswerSource = Callable[[CuratorQuestion], Any] | Mapping[str, Any] | None


def _resolve_answer(answers: AnswerSource, question: CuratorQuestion):
    if answers is None:
        return None
    if callable(answers):
        return answers(question)
    if question.id in answers:
        return answers[question.id]
    return answers.get(question.kind.value)


class RevivalEngine:
    """Owns the session store, knowledge base, transports, and providers."""

    def __init__(
        self,
        data_dir: str | Path,
        clock: Callable[[], float] | None = None,
        id_factory: Callable[[], str] | None = None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or time.time
        self.id_factory = id_factory or (lambda: uuid.uuid4().hex[:12])
        self.kb = KnowledgeBase(self.data_dir / "kb", clock=self.clock)
        self.sessions: dict[str, RevivalSession] = {}
        # name -> provider instance, for providers beyond the built-in two
        self.extra_providers: dict[str, object] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._global_lock = threading.Lock()

    # -- infrastructure

    def _lock(self, session_id: str) -> threading.RLock:
        with self._global_lock:
            return self._locks.setdefault(session_id, threading.RLock())

    def _transport(self, session: RevivalSession):
        if session.config.transport is TransportMode.FIXTURE:
            if not session.config.fixtures_path:
                raise TerminalFailure("fixture transport requires a fixtures path")
            return FixtureTransport.from_path(session.config.fixtures_path)
        return LiveTransport()

    def _provider(self, session: RevivalSession):
        if session.config.provider in self.extra_providers:
            return self.extra_providers[session.config.provider]
        if session.config.provider == "remote":
            if not session.config.provider_endpoint:
                raise TerminalFailure("remote provider requires an endpoint")

            class _UrllibTransport:
                def post_json(self, url: str, payload: dict) -> dict:
                    import urllib.request

                    req = urllib.request.Request(
                        url,
                        data=json.dumps(payload).encode("utf-8"),
                        headers={"Content-Type": "application/json"},
                        method="POST",
                    )
                    with urllib.request.urlopen(req, timeout=60) as resp:
                        return json.loads(resp.read().decode("utf-8"))

            return RemoteProvider(session.config.provider_endpoint, _UrllibTransport())
        return DeterministicProvider(adapters={r.step_id: r.response_adapter for r in session.substitutions})

    def _event(self, session: RevivalSession, kind: str, **payload) -> None:
        event = {"seq": len(session.events), "ts": iso_utc(self.clock()), "event": kind, **payload}
        session.events.append(event)
        session.dir.mkdir(parents=True, exist_ok=True)
        with session.transcript_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")

    def _save_snapshot(self, session: RevivalSession) -> None:
        (session.dir / "snapshot.json").write_text(
            pretty_json(session.to_snapshot()), encoding="utf-8"
        )

    def _queue_question(
        self,
        session: RevivalSession,
        kind: QuestionKind,
        text: str,
        step: str | None,
        options: tuple[str, ...] | None = None,
    ) -> CuratorQuestion | None:
        for q in session.open_questions:
            if q.kind is kind and q.linked_step == step:
                return None
        session.question_serial += 1
        question = CuratorQuestion(
            id=f"q{session.question_serial:03d}-{kind.value}-{step or 'workflow'}",
            kind=kind,
            text=text,
            options=options,
            linked_step=step,
        )
        session.open_questions.append(question)
        self._event(session, "question_opened", question=question.to_dict())
        return question

    # -- session lifecycle

    def create(
        self,
        upload: bytes,
        filename: str = "workflow.t2flow",
        config: SessionConfig | None = None,
        session_id: str | None = None,
    ) -> RevivalSession:
        config = config or SessionConfig()
        session_id = session_id or self.id_factory()
        directory = self.data_dir / "sessions" / session_id
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "original").mkdir(exist_ok=True)
        (directory / "original" / filename).write_bytes(upload)
        session = RevivalSession(session_id, directory, config, filename, upload)
        session._engine = self
        self.sessions[session_id] = session
        self._event(session, "created", session_id=session_id, filename=filename, config=config.to_dict())
        self._save_snapshot(session)
        return session

    def get(self, session_id: str) -> RevivalSession:
        return self.sessions[session_id]

    # -- curator rule construction

    def _add_curator_rule(self, session: RevivalSession, step_id: str | None, url: str) -> SubstitutionRule:
        from urllib.parse import urlparse

        if step_id is None or session.ir is None:
            raise AnswerShapeMismatch("this question is not linked to a service step")
        step = session.ir.step(step_id)
        if step.endpoint is None:
            raise AnswerShapeMismatch(f"step '{step_id}' does not call a service")
        parsed = urlparse(url)
        base = f"{parsed.scheme}://{parsed.netloc}"
        path = parsed.path or "/"
        hint = session.last_candidates.get(step_id)
        if "{" in path:
            operation = path
        elif hint is not None and "{" in hint.replacement.operation:
            # keep the template tail of the failed candidate, swap its first segment
            tail = hint.replacement.operation.split("/")[2:]
            operation = path.rstrip("/") + ("/" + "/".join(tail) if tail else "")
        else:
            operation = path
        params = tuple(re.findall(r"\{(\w+)\}", operation))
        adapter = hint.response_adapter if hint else ResponseAdapter.NONE
        probe_args = hint.probe_args if hint else ()
        serial = sum(1 for r in self.kb.rules if r.startswith(f"curator-{step_id}"))
        rule = SubstitutionRule(
            rule_id=f"curator-{step_id}-{serial + 1}",
            match=RuleMatch(step.endpoint.host, "*"),
            replacement=ServiceEndpoint(Protocol.REST, base, operation, params),
            response_adapter=adapter,
            confidence=Confidence.SUGGESTED,
            provenance=RuleProvenance.CURATOR_PROVIDED,
            probe_args=probe_args,
        )
        self.kb.add_rule(rule)
        self._event(session, "curator_rule", rule_id=rule.rule_id, step_id=step_id, url=url)
        return rule

    # -- candidate rules for one endpoint

    def _candidates(self, session: RevivalSession, endpoint: ServiceEndpoint) -> list[SubstitutionRule]:
        merged: dict[str, SubstitutionRule] = {}
        if session.config.use_builtin_rules:
            for rule in builtin_rules():
                merged[rule.rule_id] = rule
        for raw in session.config.seed_rules:
            rule = SubstitutionRule.from_dict(dict(raw))
            merged[rule.rule_id] = rule
        for rule in self.kb.rules.values():
            merged[rule.rule_id] = rule  # persisted knowledge wins over seeds
        matching = [r for r in merged.values() if r.match.accepts(endpoint)]
        ordered = sorted(
            matching,
            key=lambda r: (
                0 if r.confidence is Confidence.CONFIRMED else 1,
                -(r.last_ok_probe_at or 0.0),
                r.rule_id,
            ),
        )
        if endpoint.protocol is Protocol.REST:
            ordered.append(identity_rule(endpoint))
        return ordered

    # -- stage transitions

    def advance(self, session: RevivalSession) -> RevivalSession:
        """Perform exactly one stage transition (or queue questions and block)."""
        with self._lock(session.id):
            return self._advance_locked(session)

    def _advance_locked(self, session: RevivalSession) -> RevivalSession:
        if session.state in (SessionState.PACKAGED, SessionState.FAILED):
            self._event(session, "note", text=f"advance is a no-op in state {session.state.value}")
            self._save_snapshot(session)
            return session

        blocking = [q for q in session.open_questions if q.kind is not QuestionKind.PLAUSIBILITY_CHECK]
        if blocking:
            raise Blocked([q.id for q in blocking])

        stage = {
            SessionState.UPLOADED: self._advance_uploaded,
            SessionState.PARSED: self._advance_parsed,
            SessionState.LOWERED: self._advance_lowered,
            SessionState.SUBSTITUTED: self._advance_substituted,
            SessionState.SYNTHESIZED: self._advance_synthesized,
            SessionState.VALIDATED: self._advance_validated,
            SessionState.EMITTED: self._advance_emitted,
        }[session.state]
        previous = session.state
        try:
            stage(session)
        except Blocked:
            self._save_snapshot(session)
            raise
        except RevivalError as exc:
            if not isinstance(exc, TerminalFailure):
                exc = TerminalFailure(exc)
            session.state = SessionState.FAILED
            session.failure_cause = str(exc.cause)
            self._event(session, "failed", cause=str(exc.cause))
            self._save_snapshot(session)
            raise exc
        if session.state is not previous:
            self._event(session, "stage", frm=previous.value, to=session.state.value)
        self._save_snapshot(session)
        return session

    def _advance_uploaded(self, session: RevivalSession) -> None:
        session.legacy = parse_legacy(session.original_bytes)
        findings = lint_legacy(session.legacy)
        if findings:
            self._event(session, "lint", findings=[f.to_dict() for f in findings])
        session.state = SessionState.PARSED

    def _advance_parsed(self, session: RevivalSession) -> None:
        assert session.legacy is not None
        ir = detect_shims(lower(session.legacy))
        ir, records = collapse_shims(ir)
        provider = self._provider(session)
        ir = replace(
            ir,
            steps=tuple(replace(s, summary=summarize_step(s, provider)) for s in ir.steps),
        )
        session.ir = ir
        session.collapse_records = list(records)
        for step in ir.functional_steps():
            if step.kind is StepKind.OPAQUE:
                self._queue_question(
                    session,
                    QuestionKind.OPAQUE_STEP,
                    f"The step that handles '{step.id.replace('_', ' ')}' uses an activity the "
                    "engine does not recognize. Please describe what it should do.",
                    step.id,
                )
        session.state = SessionState.LOWERED

    def _substitute_step(self, session: RevivalSession, step_id: str, transport) -> bool:
        """Probe candidates for one service step; True when substituted.

        Candidates are always looked up against the step's original
        endpoint, so a re-substitution after a curator answer matches the
        same rules as the first attempt.
        """
        assert session.ir is not None
        step = session.ir.step(step_id)
        assert step.endpoint is not None
        original = next(
            (r.from_endpoint for r in session.substitutions if r.step_id == step_id), step.endpoint
        )
        for rule in self._candidates(session, original):
            session.last_candidates[step_id] = rule
            url = rule.probe_url()
            result = probe(url, transport, timeout_s=min(10.0, session.config.time_budget_s), clock=self.clock)
            self.kb.record_probe(result)
            self._event(session, "probe", url=url, status=result.status.value, code=result.http_code)
            if not result.ok:
                continue
            decided_by = _DECIDED_BY[rule.provenance]
            confirmed = self.kb.confirm(rule, result)
            self.kb.save_snapshot()
            record = SubstitutionRecord(
                step_id=step_id,
                from_endpoint=original,
                to_endpoint=confirmed.replacement,
                decided_by=decided_by,
                response_adapter=confirmed.response_adapter,
                rule_id=confirmed.rule_id,
            )
            session.substitutions = [r for r in session.substitutions if r.step_id != step_id]
            session.substitutions.append(record)
            session.ir = replace(
                session.ir,
                steps=tuple(
                    replace(s, endpoint=confirmed.replacement) if s.id == step_id else s
                    for s in session.ir.steps
                ),
            )
            self._event(session, "substitution", record=record.to_dict())
            return True
        return False

    def _advance_lowered(self, session: RevivalSession) -> None:
        assert session.ir is not None
        transport = self._transport(session)
        unresolved: list[str] = []
        for step in session.ir.functional_steps():
            if step.kind is not StepKind.SERVICE_CALL:
                continue
            if any(r.step_id == step.id for r in session.substitutions):
                continue
            if not self._substitute_step(session, step.id, transport):
                unresolved.append(step.id)
        if unresolved:
            ids = []
            for step_id in unresolved:
                q = self._queue_question(
                    session,
                    QuestionKind.ENDPOINT_BROKEN,
                    f"No working replacement was found for the online service behind the step "
                    f"that handles '{step_id.replace('_', ' ')}'. If you know a current web "
                    "address for this service, please provide it.",
                    step_id,
                )
                if q is not None:
                    ids.append(q.id)
            raise Blocked(ids or [q.id for q in session.open_questions])
        # Endpoints changed; refresh the conceptual summaries shown in the UI.
        provider = self._provider(session)
        session.ir = replace(
            session.ir,
            steps=tuple(replace(s, summary=summarize_step(s, provider)) for s in session.ir.steps),
        )
        session.state = SessionState.SUBSTITUTED

    def _rebuild_pivot(self, session: RevivalSession) -> None:
        """(Re)synthesize the pivot, re-substituting any stale service steps."""
        assert session.ir is not None and session.legacy is not None
        stale_services = [
            step_id
            for step_id in sorted(session.pending_resynth)
            if session.ir.step(step_id).kind is StepKind.SERVICE_CALL
        ]
        if stale_services:
            transport = self._transport(session)
            failed = [s for s in stale_services if not self._substitute_step(session, s, transport)]
            if failed:
                ids = []
                for step_id in failed:
                    q = self._queue_question(
                        session,
                        QuestionKind.ENDPOINT_BROKEN,
                        f"The replacement supplied for the step that handles "
                        f"'{step_id.replace('_', ' ')}' is still not answering. Please provide "
                        "another web address.",
                        step_id,
                    )
                    if q is not None:
                        ids.append(q.id)
                raise Blocked(ids or [q.id for q in session.open_questions])
        resynthesized = set(session.pending_resynth)
        session.pending_resynth.clear()

        provider = self._provider(session)
        skeleton = build_skeleton(session.ir, original_format=session.legacy.format.value)
        script = populate_bodies(skeleton, session.ir, provider)
        session.pivot = script
        for step in session.ir.functional_steps():
            if step.id in session.synth_attempts:
                if step.id in resynthesized:
                    session.synth_attempts[step.id] += 1
            else:
                session.synth_attempts[step.id] = 1
        self._event(
            session,
            "synthesis",
            attempts=dict(sorted(session.synth_attempts.items())),
            rejected=[list(r) for r in script.rejected],
        )
        if script.rejected:
            ids = []
            for step_id, reason in script.rejected:
                q = self._queue_question(
                    session,
                    QuestionKind.OPAQUE_STEP,
                    f"The step that handles '{step_id.replace('_', ' ')}' could not be rebuilt "
                    "automatically. Please describe what it should do, and the engine will try "
                    "again.",
                    step_id,
                )
                if q is not None:
                    ids.append(q.id)
            if ids:
                raise Blocked(ids)

    def _advance_substituted(self, session: RevivalSession) -> None:
        self._rebuild_pivot(session)
        session.state = SessionState.SYNTHESIZED

    def _advance_synthesized(self, session: RevivalSession) -> None:
        assert session.pivot is not None and session.ir is not None
        if session.pending_resynth:
            # a curator answer invalidated parts of the pivot; rebuild first
            self._rebuild_pivot(session)
        run_index = len(session.reports) + 1
        workdir = session.dir / "runs" / f"run{run_index}"
        workdir.mkdir(parents=True, exist_ok=True)
        for rel, content in session.staged_inputs().items():
            target = workdir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, encoding="utf-8")
        sandbox = SandboxConfig(
            workdir=str(workdir),
            time_budget_s=session.config.time_budget_s,
            transport=session.config.transport,
            fixtures_path=session.config.fixtures_path,
        )
        report = execute(session.pivot, sandbox)
        session.reports.append(report)
        reports_dir = session.dir / "reports"
        reports_dir.mkdir(exist_ok=True)
        (reports_dir / f"{run_index}.json").write_text(pretty_json(report.to_dict()), encoding="utf-8")
        self._event(
            session,
            "execution",
            report_index=run_index,
            exit_kind=report.exit_status.kind.value,
            step_id=report.exit_status.step_id,
        )
        questions = diagnose(report, session.ir)
        queued: list[str] = []
        for q in questions:
            created = self._queue_question(session, q.kind, q.text, q.linked_step, q.options)
            if created is not None:
                queued.append(created.id)
        if report.ok:
            session.state = SessionState.VALIDATED
        else:
            raise Blocked(queued or [q.id for q in session.open_questions])

    def _advance_validated(self, session: RevivalSession) -> None:
        assert session.pivot is not None and session.ir is not None
        target = emit_snakemake(session.pivot, session.ir)
        findings = check_target(target)
        if findings:
            raise TerminalFailure(
                "emitted workflow failed structural checks: "
                + "; ".join(f.message for f in findings)
            )
        session.target = target
        self._event(session, "emitted", rules=[r.name for r in target.rules])
        session.state = SessionState.EMITTED

    def _advance_emitted(self, session: RevivalSession) -> None:
        if session.open_questions:
            raise Blocked([q.id for q in session.open_questions])
        plausibility_steps = {
            q.linked_step
            for q, _ in session.closed_questions
            if q.kind is QuestionKind.PLAUSIBILITY_CHECK and q.linked_step
        }
        if not plausibility_steps <= session.approved_steps:
            raise TerminalFailure("a plausibility check was answered without approval")
        bundle = build_bundle(session, clock=self.clock)
        self._event(session, "packaged", contents=list(bundle.contents))
        session.state = SessionState.PACKAGED

    # -- direct input registration (CLI --input, scripted runs)

    def register_input(self, session: RevivalSession, filename: str, content: str) -> None:
        """Stage sample data outside the question flow; recorded for replay."""
        session.register_input(filename, content)
        self._event(session, "input_registered", filename=filename, content=content)
        self._save_snapshot(session)

    # -- answers

    def apply_answer(self, session: RevivalSession, answer: CuratorAnswer) -> SessionEffect:
        with self._lock(session.id):
            effect = apply_answer(session, answer)
            self._event(
                session,
                "question_answered",
                question_id=answer.question_id,
                payload=answer.payload,
                effect={"kind": effect.kind, **effect.detail},
            )
            if session.state is SessionState.FAILED and session.failure_cause:
                self._event(session, "failed", cause=session.failure_cause)
            self._save_snapshot(session)
            return effect

    # -- driving loop

    def run_to_completion(self, session: RevivalSession, answers: AnswerSource = None) -> RevivalSession:
        """Advance until Packaged, Failed, or blocked on unanswered questions."""
        for _ in range(MAX_RUN_ITERATIONS):
            if session.state in (SessionState.PACKAGED, SessionState.FAILED):
                return session
            try:
                self.advance(session)
                continue
            except Blocked:
                pass
            except TerminalFailure:
                return session
            progressed = False
            for question in list(session.open_questions):
                payload = _resolve_answer(answers, question)
                if payload is None:
                    continue
                try:
                    self.apply_answer(session, CuratorAnswer(question.id, payload))
                    progressed = True
                except (AnswerShapeMismatch, UnknownQuestion) as exc:
                    self._event(session, "note", text=f"auto-answer failed: {exc}")
            if not progressed:
                return session
        self._event(session, "note", text="run_to_completion hit its iteration bound")
        return session

    # -- replay

    def replay(self, transcript_path: str | Path, original_path: str | Path, data_dir: str | Path) -> RevivalSession:
        """Re-run a recorded session against a fresh engine and store.

        The transcript supplies the session id, config, and answer
        sequence; everything else is recomputed. With fixture transports
        the result must match the original run.
        """
        events = [
            json.loads(line)
            for line in Path(transcript_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        created = next(e for e in events if e["event"] == "created")
        answers = [
            (e["question_id"], e["payload"]) for e in events if e["event"] == "question_answered"
        ]
        answer_queue = list(answers)

        def scripted(question: CuratorQuestion):
            for i, (qid, payload) in enumerate(answer_queue):
                if qid == question.id:
                    answer_queue.pop(i)
                    return payload
            return None

        fresh = RevivalEngine(data_dir, clock=self.clock)
        session = fresh.create(
            Path(original_path).read_bytes(),
            filename=created["filename"],
            config=SessionConfig.from_dict(created["config"]),
            session_id=created.get("session_id") or _session_id_from_events(events),
        )
        for event in events:
            if event["event"] == "input_registered":
                fresh.register_input(session, event["filename"], event["content"])
        return fresh.run_to_completion(session, scripted)


def _session_id_from_events(events: list[dict]) -> str | None:
    for event in events:
        if "session_id" in event:
            return event["session_id"]
    return None
