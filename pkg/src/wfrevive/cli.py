"""Command-line interface: parse, probe, revive, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._util import pretty_json
from .errors import RevivalError
from .legacy import lint_legacy, parse_legacy
from .services import FixtureTransport, LiveTransport, probe
from .session import RevivalEngine, SessionConfig, SessionState
from .validation import TransportMode


def cmd_parse(args: argparse.Namespace) -> int:
    raw = Path(args.file).read_bytes()
    workflow = parse_legacy(raw)
    if args.json:
        print(json.dumps(workflow.to_dict(), sort_keys=True, indent=2))
        return 0
    print(f"{workflow.title} [{workflow.format.value}]")
    print(f"  digest: {workflow.source_digest}")
    print(f"  processors: {len(workflow.processors)}, datalinks: {len(workflow.datalinks)}")
    print(f"  inputs: {', '.join(workflow.workflow_inputs) or '-'}")
    print(f"  outputs: {', '.join(workflow.workflow_outputs) or '-'}")
    for finding in lint_legacy(workflow):
        print(f"  {finding.severity}: {finding.message}")
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    transport = FixtureTransport.from_path(args.fixtures) if args.fixtures else LiveTransport()
    result = probe(args.url, transport, timeout_s=args.timeout)
    print(pretty_json(result.to_dict()), end="")
    return 0 if result.ok else 1


def cmd_revive(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    engine = RevivalEngine(out_dir)
    offline = args.offline or bool(args.fixtures)
    config = SessionConfig(
        transport=TransportMode.FIXTURE if offline else TransportMode.LIVE,
        fixtures_path=str(Path(args.fixtures).resolve()) if args.fixtures else None,
        provider=args.provider,
        provider_endpoint=args.provider_endpoint,
        target=args.target,
    )
    raw = Path(args.file).read_bytes()
    session = engine.create(raw, filename=Path(args.file).name, config=config)
    if args.input:
        engine.register_input(session, "input.txt", Path(args.input).read_text(encoding="utf-8"))

    answers = None
    if args.answers:
        answers = json.loads(Path(args.answers).read_text(encoding="utf-8"))
    engine.run_to_completion(session, answers)

    print(f"session {session.id}: {session.state.value}")
    for question in session.open_questions:
        print(f"  open question [{question.kind.value}]: {question.text}")
    if session.state is SessionState.PACKAGED:
        print(f"bundle: {session.bundle_dir}")
        return 0
    if session.state is SessionState.FAILED:
        print(f"failed: {session.failure_cause}", file=sys.stderr)
        return 2
    print("blocked: supply the missing answers (see --answers) and rerun", file=sys.stderr)
    return 1


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    serve(
        port=args.port,
        data_dir=args.data_dir,
        fixtures=str(Path(args.fixtures).resolve()) if args.fixtures else None,
        host=args.host,
        static_dir=args.static,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfrevive", description="Revive decayed legacy scientific workflows.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse a t2flow/SCUFL document")
    p_parse.add_argument("file")
    p_parse.add_argument("--json", action="store_true", help="print the full model as canonical JSON")
    p_parse.set_defaults(func=cmd_parse)

    p_probe = sub.add_parser("probe", help="check one service URL for liveness")
    p_probe.add_argument("url")
    p_probe.add_argument("--fixtures", help="recorded-response file or directory (offline probe)")
    p_probe.add_argument("--timeout", type=float, default=10.0)
    p_probe.set_defaults(func=cmd_probe)

    p_revive = sub.add_parser("revive", help="run a full revival non-interactively")
    p_revive.add_argument("file")
    p_revive.add_argument("--target", default="snakemake", choices=["snakemake"])
    p_revive.add_argument("--offline", action="store_true", help="forbid network access (requires --fixtures)")
    p_revive.add_argument("--fixtures", help="recorded-response file or directory")
    p_revive.add_argument("--out", required=True, help="data directory for the session and bundle")
    p_revive.add_argument("--answers", help="JSON file answering curator questions by id or kind")
    p_revive.add_argument("--input", help="sample input file to stage for validation")
    p_revive.add_argument("--provider", default="deterministic", choices=["deterministic", "remote"])
    p_revive.add_argument("--provider-endpoint", help="HTTPS endpoint for the remote synthesis provider")
    p_revive.set_defaults(func=cmd_revive)

    p_serve = sub.add_parser("serve", help="run the HTTP API for the curator console")
    p_serve.add_argument("--port", type=int, default=8972)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", required=True)
    p_serve.add_argument("--fixtures", help="default recorded-response file for new sessions")
    p_serve.add_argument("--static", help="directory of built console assets to serve at /")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RevivalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
