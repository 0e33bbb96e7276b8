"""Service endpoint substitution: rules, liveness probes, knowledge base.

Retired endpoints (typically SOAP) are mapped onto modern candidates via
substitution rules. Candidates are probed for liveness before use, and a
successful probe upgrades the rule to Confirmed and persists it, so the
knowledge base grows with every revived workflow.
"""

from __future__ import annotations

import fnmatch
import json
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable
from urllib.parse import urlparse

from ._util import Clock, pretty_json
from .errors import MalformedRecord, UnconfirmableProbe

DEFAULT_PROBE_TIMEOUT_S = 10.0
BODY_PREFIX_BYTES = 256


class Protocol(str, Enum):
    SOAP = "soap"
    REST = "rest"


class ResponseAdapter(str, Enum):
    """How a substituted service's response text is turned into data."""

    NONE = "none"
    TAB_SEPARATED_PAIRS = "tab_separated_pairs"
    LINE_LIST = "line_list"


class Confidence(str, Enum):
    CONFIRMED = "confirmed"
    SUGGESTED = "suggested"


class RuleProvenance(str, Enum):
    BUILTIN = "builtin"
    LEARNED = "learned"
    CURATOR_PROVIDED = "curator_provided"


@dataclass(frozen=True)
class ServiceEndpoint:
    """One callable service: a base URL plus an operation on it.

    For SOAP, `operation` is the operation name and `base_url` the WSDL
    location. For REST, `operation` is a path template whose `{param}`
    placeholders are filled from the step's input values.
    """

    protocol: Protocol
    base_url: str
    operation: str
    params: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        parsed = urlparse(self.base_url)
        if not parsed.scheme or not parsed.netloc:
            raise ValueError(f"endpoint base_url must be absolute: {self.base_url!r}")
        if self.protocol is Protocol.REST and not self.operation.startswith("/"):
            raise ValueError(f"REST operation must start with '/': {self.operation!r}")

    @property
    def host(self) -> str:
        return urlparse(self.base_url).netloc.lower()

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "base_url": self.base_url,
            "operation": self.operation,
            "params": list(self.params),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceEndpoint":
        return cls(
            protocol=Protocol(d["protocol"]),
            base_url=d["base_url"],
            operation=d["operation"],
            params=tuple(d.get("params", ())),
        )


@dataclass(frozen=True)
class RuleMatch:
    """Glob patterns over (host, operation) selecting endpoints to rewrite."""

    host_pattern: str
    operation_pattern: str

    def accepts(self, endpoint: ServiceEndpoint) -> bool:
        return fnmatch.fnmatch(endpoint.host, self.host_pattern.lower()) and fnmatch.fnmatch(
            endpoint.operation.lower(), self.operation_pattern.lower()
        )

    def to_dict(self) -> dict:
        return {"host_pattern": self.host_pattern, "operation_pattern": self.operation_pattern}

    @classmethod
    def from_dict(cls, d: dict) -> "RuleMatch":
        return cls(d["host_pattern"], d["operation_pattern"])


class ProbeStatusKind(str, Enum):
    OK = "ok"
    HTTP_ERROR = "http_error"
    TIMEOUT = "timeout"
    UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class ProbeResult:
    """Evidence from one liveness check of a candidate URL."""

    url: str
    status: ProbeStatusKind
    http_code: int | None
    latency_ms: int
    body_prefix: str
    probed_at: float

    @property
    def ok(self) -> bool:
        return self.status is ProbeStatusKind.OK

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "status": self.status.value,
            "http_code": self.http_code,
            "latency_ms": self.latency_ms,
            "body_prefix": self.body_prefix,
            "probed_at": self.probed_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeResult":
        return cls(
            url=d["url"],
            status=ProbeStatusKind(d["status"]),
            http_code=d.get("http_code"),
            latency_ms=int(d["latency_ms"]),
            body_prefix=d.get("body_prefix", ""),
            probed_at=float(d["probed_at"]),
        )


@dataclass(frozen=True)
class SubstitutionRule:
    """Mapping from a retired endpoint shape to a modern replacement.

    `probe_args` supplies sample values for the replacement's path
    placeholders so the rule can be health-checked without workflow data.
    A rule may only be Confirmed while referencing at least one Ok probe.
    """

    rule_id: str
    match: RuleMatch
    replacement: ServiceEndpoint
    response_adapter: ResponseAdapter = ResponseAdapter.NONE
    confidence: Confidence = Confidence.SUGGESTED
    provenance: RuleProvenance = RuleProvenance.BUILTIN
    probe_args: tuple[tuple[str, str], ...] = ()
    ok_probe_urls: tuple[str, ...] = ()
    last_ok_probe_at: float | None = None

    def __post_init__(self) -> None:
        if self.confidence is Confidence.CONFIRMED and not self.ok_probe_urls:
            raise ValueError(f"rule {self.rule_id} is Confirmed without probe evidence")

    def probe_url(self) -> str:
        """URL used to health-check this rule's replacement.

        Placeholders are filled from probe_args; with placeholders left
        unfilled, only the base URL's liveness is checked.
        """
        op = self.replacement.operation
        for name, value in self.probe_args:
            op = op.replace("{%s}" % name, value)
        if "{" in op:
            return self.replacement.base_url
        return self.replacement.base_url.rstrip("/") + op

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "match": self.match.to_dict(),
            "replacement": self.replacement.to_dict(),
            "response_adapter": self.response_adapter.value,
            "confidence": self.confidence.value,
            "provenance": self.provenance.value,
            "probe_args": [list(p) for p in self.probe_args],
            "ok_probe_urls": list(self.ok_probe_urls),
            "last_ok_probe_at": self.last_ok_probe_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubstitutionRule":
        return cls(
            rule_id=d["rule_id"],
            match=RuleMatch.from_dict(d["match"]),
            replacement=ServiceEndpoint.from_dict(d["replacement"]),
            response_adapter=ResponseAdapter(d.get("response_adapter", "none")),
            confidence=Confidence(d.get("confidence", "suggested")),
            provenance=RuleProvenance(d.get("provenance", "builtin")),
            probe_args=tuple(tuple(p) for p in d.get("probe_args", ())),
            ok_probe_urls=tuple(d.get("ok_probe_urls", ())),
            last_ok_probe_at=d.get("last_ok_probe_at"),
        )


def describe_rule(rule: SubstitutionRule) -> str:
    """One-line human/prompt description of a substitution rule."""
    r = rule.replacement
    adapter = {
        ResponseAdapter.NONE: "raw text",
        ResponseAdapter.TAB_SEPARATED_PAIRS: "tab-separated id pairs",
        ResponseAdapter.LINE_LIST: "one value per line",
    }[rule.response_adapter]
    return (
        f"Replace calls matching host '{rule.match.host_pattern}' operation "
        f"'{rule.match.operation_pattern}' with GET {r.base_url.rstrip('/')}{r.operation} "
        f"(response: {adapter})"
    )


# --------------------------------------------------------------------------
# Transports


class TransportTimeout(Exception):
    pass


class TransportUnreachable(Exception):
    pass


class LiveTransport:
    """Plain GET over the real network."""

    def get(self, url: str, timeout_s: float) -> tuple[int, bytes]:
        req = urllib.request.Request(url, method="GET", headers={"User-Agent": "wfrevive/0.1"})
        try:
            with urllib.request.urlopen(req, timeout=timeout_s) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as exc:
            return exc.code, exc.read() or b""
        except TimeoutError as exc:
            raise TransportTimeout(str(exc)) from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, TimeoutError):
                raise TransportTimeout(str(exc)) from exc
            raise TransportUnreachable(str(exc)) from exc
        except OSError as exc:
            raise TransportUnreachable(str(exc)) from exc


class FixtureTransport:
    """Replays recorded responses from a `"<METHOD> <URL>"` JSON map.

    Deterministic by construction: URLs absent from the map are
    unreachable, and no socket is ever opened.
    """

    def __init__(self, responses: dict[str, dict]):
        self.responses = dict(responses)
        self.requests_seen: list[str] = []

    @classmethod
    def from_path(cls, path: str | Path) -> "FixtureTransport":
        """Load one fixture file, or merge every *.json file in a directory."""
        p = Path(path)
        merged: dict[str, dict] = {}
        files = sorted(p.glob("*.json")) if p.is_dir() else [p]
        for f in files:
            merged.update(json.loads(f.read_text(encoding="utf-8")))
        return cls(merged)

    def get(self, url: str, timeout_s: float) -> tuple[int, bytes]:
        key = f"GET {url}"
        self.requests_seen.append(key)
        entry = self.responses.get(key)
        if entry is None:
            raise TransportUnreachable(f"no recorded response for {key}")
        return int(entry.get("status", 200)), str(entry.get("body", "")).encode("utf-8")


def probe(
    url: str,
    transport,
    timeout_s: float = DEFAULT_PROBE_TIMEOUT_S,
    clock: Clock | None = None,
) -> ProbeResult:
    """Check one URL's liveness. Failures are statuses, never exceptions."""
    clock = clock or time.time
    started = clock()
    fixture_mode = isinstance(transport, FixtureTransport)
    try:
        status_code, body = transport.get(url, timeout_s)
    except TransportTimeout:
        return ProbeResult(url, ProbeStatusKind.TIMEOUT, None, 0 if fixture_mode else _ms(started, clock), "", started)
    except TransportUnreachable:
        return ProbeResult(url, ProbeStatusKind.UNREACHABLE, None, 0 if fixture_mode else _ms(started, clock), "", started)
    prefix = body[:BODY_PREFIX_BYTES].decode("utf-8", "replace")
    latency = 0 if fixture_mode else _ms(started, clock)
    if 200 <= status_code <= 299:
        return ProbeResult(url, ProbeStatusKind.OK, status_code, latency, prefix, started)
    return ProbeResult(url, ProbeStatusKind.HTTP_ERROR, status_code, latency, prefix, started)


def _ms(started: float, clock: Clock) -> int:
    return max(0, int((clock() - started) * 1000))


def probe_many(
    urls: Iterable[str],
    transport,
    timeout_s: float = DEFAULT_PROBE_TIMEOUT_S,
    parallelism: int = 4,
    clock: Clock | None = None,
) -> list[ProbeResult]:
    """Probe several URLs concurrently, preserving input order."""
    from concurrent.futures import ThreadPoolExecutor

    urls = list(urls)
    if not urls:
        return []
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(lambda u: probe(u, transport, timeout_s, clock), urls))


# --------------------------------------------------------------------------
# Response parsing


def parse_conv_response(body: str) -> dict[str, str]:
    """Parse a tab-separated id-mapping response.

    Each nonempty line must be `A<TAB>B`; the namespace prefix of A (up to
    the first ':') is stripped and the remainder maps to B.
    """
    mapping: dict[str, str] = {}
    for line_no, line in enumerate(body.split("\n"), start=1):
        if not line.strip():
            continue
        left, sep, right = line.partition("\t")
        if not sep:
            raise MalformedRecord(line_no, line)
        key = left.strip().split(":", 1)[-1]
        mapping[key] = right.strip()
    return mapping


# --------------------------------------------------------------------------
# Knowledge base


class KnowledgeBase:
    """Append-only store of substitution rules and probe evidence.

    Persists as a JSON-lines event ledger (`rules.jsonl`) plus a compacted
    snapshot (`snapshot.json`). The ledger is the source of truth; the
    snapshot is a convenience for inspection. All mutation goes through a
    single internal lock (single-writer contract).
    """

    def __init__(self, directory: str | Path | None = None, clock: Clock | None = None):
        self.directory = Path(directory) if directory else None
        self.clock = clock or time.time
        self._lock = threading.Lock()
        self.rules: dict[str, SubstitutionRule] = {}
        self.probes: list[ProbeResult] = []
        if self.directory is not None:
            self._load()

    # -- persistence

    @property
    def _ledger_path(self) -> Path | None:
        return self.directory / "rules.jsonl" if self.directory else None

    def _load(self) -> None:
        ledger = self._ledger_path
        if ledger is None or not ledger.exists():
            return
        for raw in ledger.read_text(encoding="utf-8").splitlines():
            if raw.strip():
                self._apply_event(json.loads(raw))

    def _apply_event(self, event: dict) -> None:
        kind = event.get("event")
        if kind == "rule_added":
            rule = SubstitutionRule.from_dict(event["rule"])
            self.rules[rule.rule_id] = rule
        elif kind == "probe_recorded":
            self.probes.append(ProbeResult.from_dict(event["probe"]))
        elif kind == "rule_confirmed":
            rule = self.rules.get(event["rule_id"])
            if rule is not None:
                self.rules[rule.rule_id] = replace(
                    rule,
                    confidence=Confidence.CONFIRMED,
                    provenance=RuleProvenance(event["provenance"]),
                    ok_probe_urls=tuple(event["ok_probe_urls"]),
                    last_ok_probe_at=event["last_ok_probe_at"],
                )

    def _append_event(self, event: dict) -> None:
        ledger = self._ledger_path
        if ledger is None:
            return
        ledger.parent.mkdir(parents=True, exist_ok=True)
        with ledger.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def save_snapshot(self) -> None:
        if self.directory is None:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        snapshot = {
            "rules": [r.to_dict() for r in sorted(self.rules.values(), key=lambda r: r.rule_id)],
            "probes": [p.to_dict() for p in self.probes],
        }
        (self.directory / "snapshot.json").write_text(pretty_json(snapshot), encoding="utf-8")

    # -- mutation

    def add_rule(self, rule: SubstitutionRule) -> None:
        with self._lock:
            if self.rules.get(rule.rule_id) == rule:
                return
            self.rules[rule.rule_id] = rule
            self._append_event({"event": "rule_added", "rule": rule.to_dict()})

    def record_probe(self, result: ProbeResult) -> None:
        with self._lock:
            self.probes.append(result)
            self._append_event({"event": "probe_recorded", "probe": result.to_dict()})

    def confirm(self, rule: SubstitutionRule, result: ProbeResult) -> SubstitutionRule:
        """Upgrade a rule to Confirmed on the strength of an Ok probe.

        Idempotent: confirming with an already-recorded probe URL is a
        no-op. Raises UnconfirmableProbe for any non-Ok probe.
        """
        if not result.ok:
            raise UnconfirmableProbe(f"cannot confirm {rule.rule_id} with status {result.status.value}")
        with self._lock:
            current = self.rules.get(rule.rule_id, rule)
            if current.confidence is Confidence.CONFIRMED and result.url in current.ok_probe_urls:
                return current
            provenance = (
                RuleProvenance.CURATOR_PROVIDED
                if current.provenance is RuleProvenance.CURATOR_PROVIDED
                else RuleProvenance.LEARNED
            )
            urls = tuple(dict.fromkeys((*current.ok_probe_urls, result.url)))
            confirmed = replace(
                current,
                confidence=Confidence.CONFIRMED,
                provenance=provenance,
                ok_probe_urls=urls,
                last_ok_probe_at=result.probed_at,
            )
            if rule.rule_id not in self.rules:
                self.rules[rule.rule_id] = current
                self._append_event({"event": "rule_added", "rule": current.to_dict()})
            self.rules[rule.rule_id] = confirmed
            self._append_event(
                {
                    "event": "rule_confirmed",
                    "rule_id": rule.rule_id,
                    "provenance": provenance.value,
                    "ok_probe_urls": list(urls),
                    "last_ok_probe_at": result.probed_at,
                    "probe_url": result.url,
                    "probe_status": result.status.value,
                }
            )
            return confirmed

    # -- queries

    def lookup(self, endpoint: ServiceEndpoint) -> list[SubstitutionRule]:
        """Rules accepting the endpoint: Confirmed first, freshest probe first."""
        matches = [r for r in self.rules.values() if r.match.accepts(endpoint)]
        return sorted(
            matches,
            key=lambda r: (
                0 if r.confidence is Confidence.CONFIRMED else 1,
                -(r.last_ok_probe_at or 0.0),
                r.rule_id,
            ),
        )


def lookup(endpoint: ServiceEndpoint, kb: KnowledgeBase) -> list[SubstitutionRule]:
    return kb.lookup(endpoint)


def confirm(rule: SubstitutionRule, result: ProbeResult, kb: KnowledgeBase) -> KnowledgeBase:
    kb.confirm(rule, result)
    return kb


def builtin_rules() -> list[SubstitutionRule]:
    """Seed rules shipped with the engine.

    The KEGG SOAP-to-REST pair covers gene-id conversion and pathway
    lookup; the identity rule lets already-RESTful endpoints pass through
    once their liveness is confirmed.
    """
    return [
        SubstitutionRule(
            rule_id="kegg-conv-rest",
            match=RuleMatch("*genome.jp", "*conv*"),
            replacement=ServiceEndpoint(
                Protocol.REST, "https://rest.kegg.jp", "/conv/genes/{source_id}", ("source_id",)
            ),
            response_adapter=ResponseAdapter.TAB_SEPARATED_PAIRS,
            probe_args=(("source_id", "ncbi-geneid:7124"),),
        ),
        SubstitutionRule(
            rule_id="kegg-pathway-rest",
            match=RuleMatch("*genome.jp", "*pathway*"),
            replacement=ServiceEndpoint(
                Protocol.REST, "https://rest.kegg.jp", "/link/pathway/{gene}", ("gene",)
            ),
            response_adapter=ResponseAdapter.LINE_LIST,
            probe_args=(("gene", "hsa:7124"),),
        ),
    ]


def identity_rule(endpoint: ServiceEndpoint) -> SubstitutionRule:
    """Pass-through rule for an endpoint that is already RESTful.

    Scoped to the exact (host, operation) pair so two services on the same
    host never inherit each other's path template.
    """
    from ._util import snake_case

    return SubstitutionRule(
        rule_id=f"identity-{endpoint.host}-{snake_case(endpoint.operation)}",
        match=RuleMatch(endpoint.host, endpoint.operation),
        replacement=endpoint,
        response_adapter=ResponseAdapter.NONE,
        provenance=RuleProvenance.BUILTIN,
    )
