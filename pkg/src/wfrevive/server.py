"""HTTP facade for sessions, graphs, conversation, execution, and bundles.

Every response is an envelope {ok, data} or {ok, error:{code, message}};
errors never carry stack traces. Long operations (advance-to-completion,
execute) run in background threads and are polled through task ids, with a
short synchronous grace window so fixture-mode runs answer immediately.
The event stream replays the session transcript and follows it live for
the console's progress panel.
"""

from __future__ import annotations

import io
import json
import tarfile
import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response, StreamingResponse

from . import __version__
from .errors import (
    AnswerShapeMismatch,
    Blocked,
    IncompleteSession,
    RevivalError,
    TerminalFailure,
    UnknownQuestion,
)
from .session import RevivalEngine, SessionConfig, SessionState
from .validation import CuratorAnswer, SandboxConfig, TransportMode, execute

SYNC_GRACE_S = 1.5

_ERROR_CODES = [
    (Blocked, 409, "blocked"),
    (UnknownQuestion, 404, "unknown_question"),
    (AnswerShapeMismatch, 422, "answer_shape_mismatch"),
    (IncompleteSession, 409, "incomplete_session"),
    (TerminalFailure, 409, "terminal_failure"),
    (RevivalError, 400, "revival_error"),
]


def _ok(data, status_code: int = 200) -> JSONResponse:
    return JSONResponse({"ok": True, "data": data}, status_code=status_code)


def _err(code: str, message: str, status_code: int) -> JSONResponse:
    return JSONResponse({"ok": False, "error": {"code": code, "message": message}}, status_code=status_code)


class TaskRegistry:
    def __init__(self):
        self._tasks: dict[str, dict] = {}
        self._lock = threading.Lock()

    def start(self, kind: str, session_id: str, work) -> str:
        task_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._tasks[task_id] = {"id": task_id, "kind": kind, "session_id": session_id, "status": "running"}

        def runner():
            try:
                result = work()
                with self._lock:
                    self._tasks[task_id].update(status="done", result=result)
            except RevivalError as exc:
                with self._lock:
                    self._tasks[task_id].update(status="failed", error=str(exc))
            except Exception:  # noqa: BLE001 - never leak internals
                with self._lock:
                    self._tasks[task_id].update(status="failed", error="internal error")

        thread = threading.Thread(target=runner, daemon=True)
        with self._lock:
            self._tasks[task_id]["thread"] = thread
        thread.start()
        return task_id

    def get(self, task_id: str) -> dict | None:
        with self._lock:
            task = self._tasks.get(task_id)
            return None if task is None else {k: v for k, v in task.items() if k != "thread"}

    def wait(self, task_id: str, timeout_s: float) -> dict | None:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            task = self.get(task_id)
            if task and task["status"] != "running":
                return task
            time.sleep(0.02)
        return self.get(task_id)


def session_summary(session) -> dict:
    return {
        "id": session.id,
        "state": session.state.value,
        "title": session.legacy.title if session.legacy else None,
        "format": session.legacy.format.value if session.legacy else None,
        "open_questions": [q.to_dict() for q in session.open_questions],
        "closed_questions": [
            {"question": q.to_dict(), "answer": payload} for q, payload in session.closed_questions
        ],
        "substitutions": [r.to_dict() for r in session.substitutions],
        "collapse_records": [r.to_dict() for r in session.collapse_records],
        "reports": len(session.reports),
        "pivot_text": session.pivot.render() if session.pivot else None,
        "snakefile": session.target.snakefile if session.target else None,
        "failure_cause": session.failure_cause,
        "bundle_ready": session.state is SessionState.PACKAGED,
        "stages": [s.value for s in SessionState if s is not SessionState.FAILED],
    }


def create_app(engine: RevivalEngine, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="wfrevive", version=__version__)
    tasks = TaskRegistry()

    @app.exception_handler(RevivalError)
    async def revival_error_handler(request: Request, exc: RevivalError):
        for cls, status_code, code in _ERROR_CODES:
            if isinstance(exc, cls):
                return _err(code, str(exc), status_code)
        return _err("revival_error", str(exc), 400)

    @app.exception_handler(Exception)
    async def unexpected_error_handler(request: Request, exc: Exception):
        return _err("internal", "internal error", 500)

    def get_session(session_id: str):
        try:
            return engine.get(session_id)
        except KeyError:
            raise UnknownQuestion(f"no such session: {session_id}") from None

    @app.get("/healthz")
    async def healthz():
        return _ok({"status": "ok", "version": __version__})

    @app.post("/sessions")
    async def create_session(
        file: UploadFile = File(...),
        transport: str | None = Form(None),
        fixtures_path: str | None = Form(None),
        provider: str | None = Form(None),
    ):
        raw = await file.read()
        config = SessionConfig(
            transport=TransportMode(transport) if transport else engine_default_transport(engine),
            fixtures_path=fixtures_path or getattr(engine, "default_fixtures_path", None),
            provider=provider or "deterministic",
        )
        session = engine.create(raw, filename=file.filename or "workflow.t2flow", config=config)
        return _ok({"id": session.id, "state": session.state.value}, status_code=201)

    @app.get("/sessions/{session_id}")
    async def get_session_view(session_id: str):
        return _ok(session_summary(get_session(session_id)))

    @app.get("/sessions/{session_id}/graph")
    async def get_graph(session_id: str):
        session = get_session(session_id)
        if session.ir is None:
            return _err("no_graph", "the session has not been lowered yet", 409)
        return _ok(session.ir.to_dict())

    @app.get("/sessions/{session_id}/questions")
    async def get_questions(session_id: str):
        session = get_session(session_id)
        return _ok([q.to_dict() for q in session.open_questions])

    @app.post("/sessions/{session_id}/answers")
    async def post_answer(session_id: str, payload: dict):
        session = get_session(session_id)
        answer = CuratorAnswer(str(payload.get("question_id", "")), payload.get("payload", ""))
        effect = engine.apply_answer(session, answer)
        return _ok({"effect": effect.kind, **effect.detail, "state": session.state.value})

    @app.post("/sessions/{session_id}/advance")
    async def post_advance(session_id: str, payload: dict | None = None):
        session = get_session(session_id)
        payload = payload or {}
        answers = payload.get("answers") or None
        to_completion = bool(payload.get("to_completion", True))

        def work():
            if to_completion:
                engine.run_to_completion(session, answers)
            else:
                engine.advance(session)
            return {"state": session.state.value}

        task_id = tasks.start("advance", session_id, work)
        finished = tasks.wait(task_id, SYNC_GRACE_S)
        if finished and finished["status"] != "running":
            status = 200 if finished["status"] == "done" else 409
            body = finished.get("result") or {"state": session.state.value}
            if finished["status"] == "failed":
                return _ok({"task_id": task_id, "status": "failed", "error": finished.get("error"), **body})
            return _ok({"task_id": task_id, "status": "done", **body}, status_code=status)
        return _ok({"task_id": task_id, "status": "running"}, status_code=202)

    @app.post("/sessions/{session_id}/execute")
    async def post_execute(session_id: str):
        session = get_session(session_id)
        if session.pivot is None:
            return _err("not_synthesized", "the session has no pivot script to run yet", 409)

        def work():
            run_index = len(session.reports) + 1
            workdir = session.dir / "runs" / f"manual{run_index}"
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
            (reports_dir / f"{len(session.reports)}.json").write_text(
                json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
            )
            return {"report_index": len(session.reports), "report": report.to_dict()}

        task_id = tasks.start("execute", session_id, work)
        finished = tasks.wait(task_id, SYNC_GRACE_S)
        if finished and finished["status"] == "done":
            return _ok({"task_id": task_id, "status": "done", **finished["result"]})
        if finished and finished["status"] == "failed":
            return _err("execution_failed", finished.get("error", "execution failed"), 409)
        return _ok({"task_id": task_id, "status": "running"}, status_code=202)

    @app.get("/tasks/{task_id}")
    async def get_task(task_id: str):
        task = tasks.get(task_id)
        if task is None:
            return _err("unknown_task", f"no such task: {task_id}", 404)
        return _ok(task)

    @app.get("/sessions/{session_id}/reports/{index}")
    async def get_report(session_id: str, index: int):
        session = get_session(session_id)
        if index < 1 or index > len(session.reports):
            return _err("unknown_report", f"no report #{index}", 404)
        return _ok(session.reports[index - 1].to_dict())

    @app.get("/sessions/{session_id}/bundle")
    async def get_bundle(session_id: str):
        session = get_session(session_id)
        if session.state is not SessionState.PACKAGED:
            return _err("no_bundle", "the session has not been packaged yet", 409)
        buffer = io.BytesIO()
        with tarfile.open(fileobj=buffer, mode="w") as tar:
            tar.add(session.bundle_dir, arcname=f"revival-{session.id}")
        return Response(
            content=buffer.getvalue(),
            media_type="application/x-tar",
            headers={"Content-Disposition": f'attachment; filename="revival-{session.id}.tar"'},
        )

    @app.get("/sessions/{session_id}/events")
    async def get_events(session_id: str, follow: int = 0):
        session = get_session(session_id)

        def stream():
            sent = 0
            idle = 0.0
            while True:
                events = list(session.events)
                for event in events[sent:]:
                    yield f"id: {event['seq']}\ndata: {json.dumps(event, ensure_ascii=False)}\n\n"
                sent = len(events)
                if not follow:
                    return
                terminal = session.state in (SessionState.PACKAGED, SessionState.FAILED)
                if terminal and sent == len(session.events):
                    yield "event: end\ndata: {}\n\n"
                    return
                time.sleep(0.2)
                idle += 0.2
                if idle >= 30:
                    yield ": keep-alive\n\n"
                    idle = 0.0

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


def engine_default_transport(engine: RevivalEngine) -> TransportMode:
    if getattr(engine, "default_fixtures_path", None):
        return TransportMode.FIXTURE
    return TransportMode.LIVE


def serve(
    port: int,
    data_dir: str | Path,
    fixtures: str | None = None,
    host: str = "127.0.0.1",
    static_dir: str | Path | None = None,
) -> None:
    """Run the API server until interrupted."""
    import uvicorn

    engine = RevivalEngine(data_dir)
    engine.default_fixtures_path = fixtures  # type: ignore[attr-defined]
    app = create_app(engine, static_dir=static_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        from .errors import BindFailure

        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
