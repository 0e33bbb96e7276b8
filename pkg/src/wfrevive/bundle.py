"""Self-contained revival bundles with provenance manifests.

A bundle carries the original document, the validated pivot script, the
emitted target workflow, sample data, and a `run` entry point, all under
relative paths so the directory can be moved anywhere. The manifest links
every revived artifact back to the original workflow digest and records
which endpoint substitutions and curator decisions produced it.
"""

from __future__ import annotations

import json
import re
import stat
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from . import __version__ as ENGINE_VERSION
from ._util import canonical_json, pretty_json, sha256_hex
from .errors import IncompleteSession
from .emitter import materialize

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .session import RevivalSession

RUN_SCRIPT = """\
#!/bin/sh
# Execute the revived workflow with Snakemake from inside the bundle.
set -e
cd "$(dirname "$0")"
mkdir -p workflow/input
cp -R data/. workflow/input/
cd workflow
exec snakemake --cores 1 "$@"
"""

REQUIRED_ENTRIES = (
    "manifest.json",
    "pivot/workflow.py",
    "workflow/Snakefile",
    "workflow/config.yaml",
    "run",
)

_ABSOLUTE_PATH = re.compile(r"(?m)[\"'= ](/(?:home|root|tmp|var|usr|Users)/[^\s\"']+)")
_TEXT_SUFFIXES = {".py", ".yaml", ".yml", ".json", ".txt", ".smk", ""}


@dataclass(frozen=True)
class RevivalBundle:
    root: Path
    manifest: dict
    contents: tuple[str, ...]


@dataclass(frozen=True)
class BundleFinding:
    kind: str
    message: str
    location: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "location": self.location}


def _tree_digest(files: dict[str, str]) -> str:
    return sha256_hex(canonical_json(files).encode("utf-8"))


def build_bundle(session: "RevivalSession", clock=None) -> RevivalBundle:
    """Assemble the bundle for a session that has emitted its target.

    Raises IncompleteSession unless the session is in the Emitted state
    with every curator question closed. Deterministic apart from the
    manifest's emitted_at timestamp.
    """
    clock = clock or time.time
    from .session import SessionState  # local import to avoid a cycle

    if session.state is not SessionState.EMITTED:
        raise IncompleteSession(f"bundle requires state Emitted, session is {session.state.value}")
    if session.open_questions:
        raise IncompleteSession("bundle requires every curator question to be closed")
    if session.pivot is None or session.target is None or session.legacy is None:
        raise IncompleteSession("session is missing revived artifacts")

    root = Path(session.bundle_dir)
    root.mkdir(parents=True, exist_ok=True)

    (root / "original").mkdir(exist_ok=True)
    original_name = session.original_filename
    (root / "original" / original_name).write_bytes(session.original_bytes)

    (root / "pivot").mkdir(exist_ok=True)
    pivot_text = session.pivot.render()
    (root / "pivot" / "workflow.py").write_text(pivot_text, encoding="utf-8")

    materialize(session.target, root / "workflow")

    (root / "data").mkdir(exist_ok=True)
    for rel, content in sorted(session.staged_inputs().items()):
        name = rel.split("/", 1)[-1]
        (root / "data" / name).write_text(content, encoding="utf-8")

    run_path = root / "run"
    run_path.write_text(RUN_SCRIPT, encoding="utf-8")
    run_path.chmod(run_path.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)

    files: dict[str, str] = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[str(path.relative_to(root))] = sha256_hex(path.read_bytes())

    workflow_files = {p: d for p, d in files.items() if p.startswith("workflow/")}
    manifest = {
        "engine_version": ENGINE_VERSION,
        "original": {
            "filename": original_name,
            "format": session.legacy.format.value,
            "source_digest": session.legacy.source_digest,
        },
        "revived": {
            "pivot_digest": sha256_hex(pivot_text.encode("utf-8")),
            "target_digest": _tree_digest(workflow_files),
            "emitted_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(clock())),
        },
        "substitutions": [
            {
                "step_id": record.step_id,
                "from_endpoint": record.from_endpoint.to_dict(),
                "to_endpoint": record.to_endpoint.to_dict(),
                "decided_by": record.decided_by,
            }
            for record in session.substitutions
        ],
        "decisions": [
            {"question_kind": q.kind.value, "answer_summary": _summarize_answer(payload)}
            for q, payload in session.closed_questions
        ],
        "files": files,
    }
    (root / "manifest.json").write_text(pretty_json(manifest), encoding="utf-8")

    contents = tuple(sorted([*files, "manifest.json"]))
    return RevivalBundle(root=root, manifest=manifest, contents=contents)


def _summarize_answer(payload) -> str:
    if isinstance(payload, dict):
        return f"uploaded {payload.get('filename', 'a file')}"
    text = str(payload)
    return text if len(text) <= 120 else text[:117] + "..."


def verify_bundle(path: str | Path) -> list[BundleFinding]:
    """Consumer-side integrity check: layout, digests, relocatability."""
    root = Path(path)
    findings: list[BundleFinding] = []
    if not root.is_dir():
        return [BundleFinding("layout", "bundle directory does not exist", str(path))]

    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        return [BundleFinding("layout", "manifest.json is missing", "manifest.json")]
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        return [BundleFinding("manifest", f"manifest.json is not valid JSON: {exc}", "manifest.json")]

    for entry in REQUIRED_ENTRIES:
        if not (root / entry).exists():
            findings.append(BundleFinding("layout", f"required entry '{entry}' is missing", entry))
    if not (root / "data").is_dir():
        findings.append(BundleFinding("layout", "required entry 'data/' is missing", "data"))
    if not (root / "original").is_dir() or not any((root / "original").iterdir()):
        findings.append(BundleFinding("layout", "original workflow document is missing", "original"))

    files = manifest.get("files", {})
    for rel, digest in sorted(files.items()):
        target = root / rel
        if not target.is_file():
            findings.append(BundleFinding("digest-mismatch", f"listed file '{rel}' is missing", rel))
            continue
        actual = sha256_hex(target.read_bytes())
        if actual != digest:
            findings.append(
                BundleFinding("digest-mismatch", f"content of '{rel}' does not match its manifest digest", rel)
            )
    for path_on_disk in sorted(root.rglob("*")):
        if not path_on_disk.is_file():
            continue
        rel = str(path_on_disk.relative_to(root))
        if rel != "manifest.json" and rel not in files:
            findings.append(BundleFinding("unlisted-file", f"file '{rel}' is not in the manifest", rel))

    for rel in sorted({*files, "manifest.json"}):
        target = root / rel
        if not target.is_file() or target.suffix.lower() not in _TEXT_SUFFIXES:
            continue
        text = target.read_text(encoding="utf-8", errors="replace")
        match = _ABSOLUTE_PATH.search(text)
        if match:
            findings.append(
                BundleFinding(
                    "relocatability", f"'{rel}' embeds the absolute path {match.group(1)}", rel
                )
            )
    return findings
