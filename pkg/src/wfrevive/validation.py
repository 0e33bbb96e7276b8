"""Sandboxed pivot execution, plain-language diagnosis, curator answers.

The pivot script runs in a separate process with a fresh working
directory, an environment allowlist, and a wall-clock budget. In fixture
mode a socket guard is injected into the child interpreter so any real
network access fails loudly; HTTP is served from the recorded-response
file instead. Every outcome becomes an ExecutionReport, and `diagnose`
deterministically maps reports to curator questions that contain no code,
stack traces, or URL syntax.
"""

from __future__ import annotations

import json
import os
import re
import subprocess
import sys
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

from ._util import sha256_hex
from .errors import AnswerShapeMismatch, SandboxSetupFailed, UnknownQuestion
from .ir import WorkflowIR
from .synthesis import PivotScript

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .session import RevivalSession

DEFAULT_TIME_BUDGET_S = 600
OUTPUT_PREVIEW_CHARS = 512

FIXTURES_ENV_VAR = "WORKFLOW_HTTP_FIXTURES"

_SOCKET_GUARD = '''\
"""Injected in fixture mode: any attempt to open a socket fails loudly."""
import socket


def _network_disabled(*args, **kwargs):
    raise RuntimeError("network access is disabled during fixture-mode validation")


class _DisabledSocket(socket.socket):
    def __init__(self, *args, **kwargs):
        _network_disabled()


socket.socket = _DisabledSocket
socket.create_connection = _network_disabled
'''


class TransportMode(str, Enum):
    LIVE = "live"
    FIXTURE = "fixture"


@dataclass(frozen=True)
class SandboxConfig:
    """Where and how a pivot script is allowed to run."""

    workdir: str
    time_budget_s: int = DEFAULT_TIME_BUDGET_S
    transport: TransportMode = TransportMode.FIXTURE
    fixtures_path: str | None = None
    env_allowlist: tuple[str, ...] = ("PATH", "LANG", "LC_ALL", "PYTHONHASHSEED")

    def to_dict(self) -> dict:
        return {
            "workdir": self.workdir,
            "time_budget_s": self.time_budget_s,
            "transport": self.transport.value,
            "fixtures_path": self.fixtures_path,
            "env_allowlist": list(self.env_allowlist),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SandboxConfig":
        return cls(
            workdir=d["workdir"],
            time_budget_s=int(d.get("time_budget_s", DEFAULT_TIME_BUDGET_S)),
            transport=TransportMode(d.get("transport", "fixture")),
            fixtures_path=d.get("fixtures_path"),
            env_allowlist=tuple(d.get("env_allowlist", ("PATH",))),
        )


class ExitKind(str, Enum):
    OK = "ok"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class ExitStatus:
    kind: ExitKind
    step_id: str | None = None
    message: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "step_id": self.step_id, "message": self.message}

    @classmethod
    def from_dict(cls, d: dict) -> "ExitStatus":
        return cls(ExitKind(d["kind"]), d.get("step_id"), d.get("message"))


@dataclass(frozen=True)
class ExecutionReport:
    """Everything observed from one sandboxed run; immutable evidence."""

    exit_status: ExitStatus
    stdout: str
    stderr: str
    outputs: dict[str, str]
    wall_time_ms: int
    transport_mode: TransportMode
    output_preview: str = ""

    @property
    def ok(self) -> bool:
        return self.exit_status.kind is ExitKind.OK

    def to_dict(self) -> dict:
        return {
            "exit_status": self.exit_status.to_dict(),
            "stdout": self.stdout,
            "stderr": self.stderr,
            "outputs": dict(sorted(self.outputs.items())),
            "wall_time_ms": self.wall_time_ms,
            "transport_mode": self.transport_mode.value,
            "output_preview": self.output_preview,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionReport":
        return cls(
            exit_status=ExitStatus.from_dict(d["exit_status"]),
            stdout=d["stdout"],
            stderr=d["stderr"],
            outputs=dict(d["outputs"]),
            wall_time_ms=int(d["wall_time_ms"]),
            transport_mode=TransportMode(d["transport_mode"]),
            output_preview=d.get("output_preview", ""),
        )


# --------------------------------------------------------------------------
# Execution


def execute(script: PivotScript, sandbox: SandboxConfig) -> ExecutionReport:
    """Run the pivot in a separate process and report every outcome.

    The caller stages sample inputs under `<workdir>/input/` beforehand.
    Execution failures are report values, never exceptions; only a broken
    sandbox setup raises.
    """
    workdir = Path(sandbox.workdir)
    try:
        workdir.mkdir(parents=True, exist_ok=True)
        (workdir / "workflow.py").write_text(script.render(), encoding="utf-8")
    except OSError as exc:
        raise SandboxSetupFailed(str(exc)) from exc

    env = {name: os.environ[name] for name in sandbox.env_allowlist if name in os.environ}
    if sandbox.transport is TransportMode.FIXTURE:
        if not sandbox.fixtures_path:
            raise SandboxSetupFailed("fixture transport requires fixtures_path")
        fixtures = Path(sandbox.fixtures_path)
        if fixtures.is_dir():
            merged: dict[str, Any] = {}
            for f in sorted(fixtures.glob("*.json")):
                merged.update(json.loads(f.read_text(encoding="utf-8")))
            fixtures = workdir / "_http_fixtures.json"
            fixtures.write_text(json.dumps(merged, sort_keys=True), encoding="utf-8")
        env[FIXTURES_ENV_VAR] = str(fixtures.resolve())
        (workdir / "sitecustomize.py").write_text(_SOCKET_GUARD, encoding="utf-8")
        env["PYTHONPATH"] = str(workdir.resolve())

    started = time.monotonic()
    try:
        proc = subprocess.run(
            [sys.executable, "workflow.py"],
            cwd=workdir,
            env=env,
            capture_output=True,
            text=True,
            timeout=sandbox.time_budget_s,
        )
        timed_out = False
        stdout, stderr, returncode = proc.stdout, proc.stderr, proc.returncode
    except subprocess.TimeoutExpired as exc:
        timed_out = True
        stdout = (exc.stdout or b"").decode("utf-8", "replace") if isinstance(exc.stdout, bytes) else (exc.stdout or "")
        stderr = (exc.stderr or b"").decode("utf-8", "replace") if isinstance(exc.stderr, bytes) else (exc.stderr or "")
        returncode = -1
    wall_time_ms = max(0, int((time.monotonic() - started) * 1000))

    outputs: dict[str, str] = {}
    results_dir = workdir / "results"
    if results_dir.is_dir():
        for path in sorted(results_dir.rglob("*")):
            if path.is_file():
                outputs[str(path.relative_to(workdir))] = sha256_hex(path.read_bytes())

    output_path = workdir / script.config_output
    preview = ""
    if output_path.is_file():
        preview = output_path.read_text(encoding="utf-8", errors="replace")[:OUTPUT_PREVIEW_CHARS]

    if timed_out:
        status = ExitStatus(ExitKind.TIMEOUT, _failed_step(stderr), "wall-clock budget exceeded")
    elif returncode == 0:
        if output_path.is_file() and output_path.stat().st_size > 0:
            status = ExitStatus(ExitKind.OK)
        else:
            status = ExitStatus(
                ExitKind.RUNTIME_ERROR, None, "completed without producing the configured output"
            )
    else:
        status = ExitStatus(ExitKind.RUNTIME_ERROR, _failed_step(stderr), _error_message(stderr))

    return ExecutionReport(
        exit_status=status,
        stdout=stdout,
        stderr=stderr,
        outputs=outputs,
        wall_time_ms=wall_time_ms,
        transport_mode=sandbox.transport,
        output_preview=preview,
    )


def _failed_step(stderr: str) -> str | None:
    match = None
    for match in re.finditer(r"STEP_FAILED:(\S+)", stderr):
        pass
    return match.group(1) if match else None


_MARKERS = ("MISSING_INPUT", "NEEDS_CURATOR", "HTTP_ERROR", "HTTP_UNREACHABLE", "RESPONSE_FORMAT")


def _error_message(stderr: str) -> str:
    for marker in _MARKERS:
        for line in stderr.splitlines():
            if marker in line:
                return line.strip()
    lines = [l.strip() for l in stderr.splitlines() if l.strip() and not l.startswith("STEP_FAILED")]
    return lines[-1] if lines else "process exited with an error"


# --------------------------------------------------------------------------
# Curator questions


class QuestionKind(str, Enum):
    ENDPOINT_BROKEN = "endpoint_broken"
    DATA_FORMAT_UNKNOWN = "data_format_unknown"
    PLAUSIBILITY_CHECK = "plausibility_check"
    MISSING_INPUT = "missing_input"
    OPAQUE_STEP = "opaque_step"


@dataclass(frozen=True)
class CuratorQuestion:
    id: str
    kind: QuestionKind
    text: str
    options: tuple[str, ...] | None = None
    linked_step: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "text": self.text,
            "options": list(self.options) if self.options else None,
            "linked_step": self.linked_step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CuratorQuestion":
        return cls(
            id=d["id"],
            kind=QuestionKind(d["kind"]),
            text=d["text"],
            options=tuple(d["options"]) if d.get("options") else None,
            linked_step=d.get("linked_step"),
        )


@dataclass(frozen=True)
class CuratorAnswer:
    question_id: str
    payload: str | dict

    def to_dict(self) -> dict:
        return {"question_id": self.question_id, "payload": self.payload}


@dataclass(frozen=True)
class SessionEffect:
    kind: str
    detail: dict = field(default_factory=dict)


def _humanize(step_id: str | None) -> str:
    return (step_id or "the workflow").replace("_", " ")


def _question(kind: QuestionKind, text: str, step: str | None, options: tuple[str, ...] | None = None) -> CuratorQuestion:
    qid = f"q-{kind.value}-{step or 'workflow'}"
    return CuratorQuestion(id=qid, kind=kind, text=text, options=options, linked_step=step)


def _first_leaf(value) -> str | None:
    if isinstance(value, dict):
        for key in sorted(value):
            leaf = _first_leaf(value[key])
            if leaf is not None:
                return leaf
        return None
    if isinstance(value, (list, tuple)):
        for item in value:
            leaf = _first_leaf(item)
            if leaf is not None:
                return leaf
        return None
    if value is None:
        return None
    return str(value)


def _all_leaves(value, acc: list[str]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _all_leaves(value[key], acc)
    elif isinstance(value, (list, tuple)):
        for item in value:
            _all_leaves(item, acc)
    elif value is not None:
        acc.append(str(value))


def diagnose(report: ExecutionReport, ir: WorkflowIR) -> list[CuratorQuestion]:
    """Deterministically turn a report into plain-language questions."""
    if report.ok:
        return [_plausibility_question(report, ir)]

    stderr = report.stderr
    step = report.exit_status.step_id
    message = report.exit_status.message or ""
    evidence = message + "\n" + stderr

    if "MISSING_INPUT" in evidence:
        return [
            _question(
                QuestionKind.MISSING_INPUT,
                "The original workflow did not come with example data. Please provide a small "
                "sample input so the revived workflow can be checked.",
                None,
            )
        ]
    if "NEEDS_CURATOR" in evidence:
        marker_step = _marker_step(evidence) or step
        return [
            _question(
                QuestionKind.OPAQUE_STEP,
                f"The step that handles '{_humanize(marker_step)}' could not be rebuilt "
                "automatically. Please describe what it should do, and the engine will try again.",
                marker_step,
            )
        ]
    if "HTTP_ERROR" in evidence or "HTTP_UNREACHABLE" in evidence or "network access is disabled" in evidence:
        return [
            _question(
                QuestionKind.ENDPOINT_BROKEN,
                f"The online service behind the step that handles '{_humanize(step)}' is not "
                "answering the way the workflow expects. If you know a current web address for "
                "this service, please provide it.",
                step,
            )
        ]
    if "RESPONSE_FORMAT" in evidence:
        return [
            _question(
                QuestionKind.DATA_FORMAT_UNKNOWN,
                f"The data coming back to the step that handles '{_humanize(step)}' does not look "
                "like the format the original workflow expected. Please describe the expected "
                "format, and the engine will rebuild the step.",
                step,
            )
        ]
    if report.exit_status.kind is ExitKind.TIMEOUT:
        return [
            _question(
                QuestionKind.OPAQUE_STEP,
                f"The step that handles '{_humanize(step)}' ran longer than the allowed time. "
                "Please advise whether it should be simplified or given a bigger budget.",
                step,
            )
        ]
    return [
        _question(
            QuestionKind.OPAQUE_STEP,
            f"The revived workflow stopped while running the step that handles "
            f"'{_humanize(step)}', and the engine cannot explain why on its own. Please review "
            "this step.",
            step,
        )
    ]


def _marker_step(evidence: str) -> str | None:
    match = re.search(r"NEEDS_CURATOR: step '([^']+)'", evidence)
    return match.group(1) if match else None


def _plausibility_question(report: ExecutionReport, ir: WorkflowIR) -> CuratorQuestion:
    in_sample = next((i.sample_value for i in ir.inputs if i.sample_value), None)
    parsed: Any = None
    try:
        parsed = json.loads(report.output_preview) if report.output_preview else None
    except json.JSONDecodeError:
        parsed = report.output_preview.splitlines()[0] if report.output_preview else None

    leaves: list[str] = []
    _all_leaves(parsed, leaves)
    degenerate = not leaves or len(set(leaves)) <= 1 and len(leaves) > 1
    final_step = next((s.id for s in reversed(ir.functional_steps())), None)

    if not leaves:
        text = (
            "The revived workflow ran to the end but produced an empty-looking result. "
            "Is that expected for this analysis?"
        )
    elif degenerate:
        text = (
            "The revived workflow ran to the end but every value in the result is identical. "
            "Is that expected for this analysis?"
        )
    else:
        out_sample = _first_leaf(parsed)
        if in_sample:
            text = (
                f"The revived workflow ran end to end. Does a mapping from {in_sample} "
                f"to {out_sample} look right?"
            )
        else:
            text = (
                f"The revived workflow ran end to end and produced {out_sample} among its "
                "results. Does that look right?"
            )
    return _question(QuestionKind.PLAUSIBILITY_CHECK, text, final_step, options=("yes", "no"))


# --------------------------------------------------------------------------
# Applying answers

_URL_IN_TEXT = re.compile(r"https?://[^\s'\"<>]+")
_YES = {"yes", "y", "true", "approve", "approved", "looks right", "ok"}
_NO = {"no", "n", "false", "reject", "rejected", "wrong"}


def apply_answer(session: "RevivalSession", answer: CuratorAnswer) -> SessionEffect:
    """Apply one curator answer to its session and close the question.

    The concrete state changes go through the session's own methods; this
    function only validates the answer shape and dispatches.
    """
    question = session.find_open_question(answer.question_id)
    if question is None:
        raise UnknownQuestion(f"no open question with id '{answer.question_id}'")

    if question.kind is QuestionKind.ENDPOINT_BROKEN:
        if not isinstance(answer.payload, str):
            raise AnswerShapeMismatch("expected text containing a service URL")
        match = _URL_IN_TEXT.search(answer.payload)
        if not match:
            raise AnswerShapeMismatch("the answer must contain an absolute http(s) URL")
        rule = session.add_curator_rule(question.linked_step, match.group(0))
        session.schedule_resynthesis(question.linked_step)
        session.close_question(question.id, answer)
        return SessionEffect("rule_added", {"rule_id": rule.rule_id, "step_id": question.linked_step})

    if question.kind is QuestionKind.MISSING_INPUT:
        if not isinstance(answer.payload, dict) or "content" not in answer.payload:
            raise AnswerShapeMismatch("expected an uploaded file: {filename, content}")
        name = str(answer.payload.get("filename", "input.txt"))
        session.register_input(name, str(answer.payload["content"]))
        session.close_question(question.id, answer)
        return SessionEffect("input_registered", {"filename": name})

    if question.kind is QuestionKind.PLAUSIBILITY_CHECK:
        if not isinstance(answer.payload, str) or answer.payload.strip().lower() not in (_YES | _NO):
            raise AnswerShapeMismatch("expected a yes or no answer")
        if answer.payload.strip().lower() in _YES:
            session.approve_step(question.linked_step)
            session.close_question(question.id, answer)
            return SessionEffect("step_approved", {"step_id": question.linked_step})
        session.close_question(question.id, answer)
        session.reject_revival("curator judged the result implausible")
        return SessionEffect("revival_rejected", {})

    # OpaqueStep and DataFormatUnknown both lead to re-synthesis with the
    # curator's description recorded as guidance.
    if not isinstance(answer.payload, (str, dict)):
        raise AnswerShapeMismatch("expected a textual description")
    guidance = answer.payload if isinstance(answer.payload, str) else json.dumps(answer.payload, sort_keys=True)
    session.record_guidance(question.linked_step, guidance)
    session.schedule_resynthesis(question.linked_step)
    session.close_question(question.id, answer)
    return SessionEffect("resynthesis_scheduled", {"step_id": question.linked_step})
