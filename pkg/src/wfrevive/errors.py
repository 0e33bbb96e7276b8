"""Exception hierarchy shared by all engine stages."""

from __future__ import annotations


class RevivalError(Exception):
    """Base class for every error raised by the engine."""


class MalformedXml(RevivalError):
    """The uploaded document is not parseable XML."""


class UnsupportedFormat(RevivalError):
    """The document parsed but is not a recognized workflow format."""


class DanglingLink(RevivalError):
    """A datalink references a processor or port that does not exist."""

    def __init__(self, names: list[str]):
        self.names = sorted(set(names))
        super().__init__(f"datalinks reference unknown targets: {', '.join(self.names)}")


class CyclicWorkflow(RevivalError):
    """The step graph contains a cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__(f"workflow graph is cyclic: {' -> '.join(self.cycle)}")


class SchemaViolation(RevivalError):
    """A JSON document does not match the expected schema."""

    def __init__(self, path: str, message: str = ""):
        self.path = path
        detail = f" ({message})" if message else ""
        super().__init__(f"schema violation at {path}{detail}")


class MalformedRecord(RevivalError):
    """A service response line could not be parsed."""

    def __init__(self, line_no: int, line: str = ""):
        self.line_no = line_no
        self.line = line
        super().__init__(f"malformed record on line {line_no}")


class UnconfirmableProbe(RevivalError):
    """A rule confirmation was attempted with a non-Ok probe."""


class UnsubstitutedEndpoint(RevivalError):
    """A service step still points at a retired endpoint."""

    def __init__(self, step_id: str):
        self.step_id = step_id
        super().__init__(f"step '{step_id}' still references a retired endpoint")


class ProviderUnavailable(RevivalError):
    """The synthesis provider could not be reached."""


class BodyRejected(RevivalError):
    """A synthesized function body failed validation."""

    def __init__(self, step_id: str, reason: str):
        self.step_id = step_id
        self.reason = reason
        super().__init__(f"body for step '{step_id}' rejected: {reason}")


class SandboxSetupFailed(RevivalError):
    """The execution sandbox could not be prepared."""


class UnknownQuestion(RevivalError):
    """An answer referenced a question that is unknown or already closed."""


class AnswerShapeMismatch(RevivalError):
    """An answer payload does not fit the question it targets."""


class EmissionImpossible(RevivalError):
    """A pivot function cannot be transpiled to the target system."""

    def __init__(self, step_id: str, reason: str):
        self.step_id = step_id
        self.reason = reason
        super().__init__(f"cannot emit step '{step_id}': {reason}")


class IncompleteSession(RevivalError):
    """Bundle building was requested before the session finished."""


class Blocked(RevivalError):
    """The session cannot advance until curator questions are answered."""

    def __init__(self, question_ids: list[str]):
        self.question_ids = list(question_ids)
        super().__init__(f"blocked on open questions: {', '.join(self.question_ids)}")


class TerminalFailure(RevivalError):
    """The session failed unrecoverably; the cause is preserved."""

    def __init__(self, cause: BaseException | str):
        self.cause = cause
        super().__init__(f"session failed: {cause}")


class BindFailure(RevivalError):
    """The API server could not bind its address."""
