"""Minimal HTTP grading service with an append-only submission record
store and assignment-level statistics.

Endpoints (HTTP/1.1, JSON bodies):

    POST /v1/assignments                      rubric document -> assignment_id
    POST /v1/assignments/{id}/submissions     SGF scene -> graded record
    GET  /v1/submissions/{id}/report          stored report, byte-identical
    GET  /v1/assignments/{id}/stats           fold over the record store
    GET  /v1/healthz                          {"status": "ok"}

Grading is synchronous: course-scale meshes grade in milliseconds, so a
job queue would only add moving parts. Run it with::

    python -m meshgrade.service --store records.log --bind 127.0.0.1:8757
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import CheckId, PreparedRubric, grade, load_rubric, prepare_rubric
from .errors import ConfigurationError
from .feedback import FeedbackTemplateSet, default_templates, render_feedback
from .ingest import parse_sgf
from .similarity import Fingerprint, cluster_fingerprints, mesh_fingerprint

__all__ = ["GradingService", "ServiceConfig", "AssignmentStats", "main"]

DEFAULT_SIZE_LIMIT = 32 * 1024 * 1024
HISTOGRAM_BINS = 10


@dataclass(frozen=True)
class ServiceConfig:
    store_path: str
    host: str = "127.0.0.1"
    port: int = 8757
    size_limit: int = DEFAULT_SIZE_LIMIT
    secret_header: str | None = None  # e.g. "X-Meshgrade-Secret"
    secret_value: str | None = None
    templates_path: str | None = None


@dataclass
class AssignmentStats:
    """Pure fold over an assignment's submission records."""

    submission_count: int = 0
    mean_score: float = 0.0
    score_histogram: list[int] = field(default_factory=lambda: [0] * HISTOGRAM_BINS)
    per_check_failure_counts: dict[str, int] = field(
        default_factory=lambda: {c.value: 0 for c in CheckId}
    )
    duplicate_cluster_count: int = 0

    def to_dict(self) -> dict:
        return {
            "submission_count": self.submission_count,
            "mean_score": self.mean_score,
            "score_histogram": self.score_histogram,
            "per_check_failure_counts": self.per_check_failure_counts,
            "duplicate_cluster_count": self.duplicate_cluster_count,
        }


def histogram_bin(score: float, max_score: float, bins: int = HISTOGRAM_BINS) -> int:
    """Index of the equal-width bin over [0, max_score] holding `score`;
    the top edge falls into the last bin."""
    if max_score <= 0:
        return 0
    idx = int(score / max_score * bins)
    return min(max(idx, 0), bins - 1)


def compute_stats(records: list[dict], max_scores: dict[str, float], assignment_id: str) -> AssignmentStats:
    stats = AssignmentStats()
    scores: list[float] = []
    fp_entries: list[tuple[str, Fingerprint]] = []
    max_score = max_scores.get(assignment_id, 100.0)
    for record in records:
        if record.get("type") != "submission" or record.get("assignment_id") != assignment_id:
            continue
        report = record["report"]
        scores.append(report["score"])
        stats.score_histogram[histogram_bin(report["score"], max_score)] += 1
        seen: set[str] = set()
        for sub in report["subscores"]:
            if sub["deduction"] > 0:
                seen.add(sub["check_id"])
        for check in seen:
            stats.per_check_failure_counts[check] += 1
        for fp in record.get("fingerprints", []):
            fp_entries.append(
                (
                    record["submission_id"],
                    Fingerprint(
                        digest=fp["digest"],
                        object_name=fp["object_name"],
                        vertex_count=fp["vertex_count"],
                        face_count=fp["face_count"],
                    ),
                )
            )
    stats.submission_count = len(scores)
    if scores:
        stats.mean_score = round(sum(scores) / len(scores), 2)
    stats.duplicate_cluster_count = len(cluster_fingerprints(fp_entries).clusters)
    return stats


class _HTTPError(Exception):
    def __init__(self, status: int, body: dict):
        super().__init__(body)
        self.status = status
        self.body = body


class GradingService:
    """Application state shared by all request handler threads.

    Assignments and submissions live in one append-only store; replaying
    it on startup restores every acknowledged record.
    """

    def __init__(self, config: ServiceConfig):
        from .store import RecordStore

        self.config = config
        self.store = RecordStore(config.store_path)
        self.templates: FeedbackTemplateSet = (
            FeedbackTemplateSet.from_file(config.templates_path)
            if config.templates_path
            else default_templates()
        )
        self._rubrics: dict[str, PreparedRubric] = {}
        self._rubric_lock = threading.Lock()
        self._assignment_docs: dict[str, dict] = {}
        self._reports: dict[str, str] = {}  # submission_id -> stored report JSON text
        for record in self.store.records():
            if record.get("type") == "assignment":
                self._assignment_docs[record["assignment_id"]] = record["rubric"]
            elif record.get("type") == "submission":
                self._reports[record["submission_id"]] = record["report_json"]

    def _prepared(self, assignment_id: str) -> PreparedRubric:
        with self._rubric_lock:
            if assignment_id in self._rubrics:
                return self._rubrics[assignment_id]
            doc = self._assignment_docs.get(assignment_id)
            if doc is None:
                raise _HTTPError(404, {"error": f"unknown assignment {assignment_id!r}"})
            prepared = prepare_rubric(load_rubric(doc))
            self._rubrics[assignment_id] = prepared
            return prepared

    # -- handlers ----------------------------------------------------------

    def create_assignment(self, body: bytes) -> tuple[int, dict]:
        try:
            doc = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise _HTTPError(400, {"error": f"rubric is not valid JSON: {exc}"})
        try:
            rubric = load_rubric(doc)
        except ConfigurationError as exc:
            raise _HTTPError(400, {"error": str(exc)})
        assignment_id = "asg-" + uuid.uuid4().hex[:12]
        self.store.append({"type": "assignment", "assignment_id": assignment_id, "rubric": doc})
        with self._rubric_lock:
            self._assignment_docs[assignment_id] = doc
            self._rubrics[assignment_id] = prepare_rubric(rubric)
        return 201, {"assignment_id": assignment_id}

    def submit(self, assignment_id: str, body: bytes) -> tuple[int, dict]:
        prepared = self._prepared(assignment_id)
        scene, parse_report = parse_sgf(body)
        if scene is None:
            raise _HTTPError(400, {"error": "scene is invalid", **parse_report.to_dict()})
        submission_id = "sub-" + uuid.uuid4().hex[:12]
        report = grade(
            scene,
            prepared,
            submission_id=submission_id,
            rubric_id=assignment_id,
        )
        feedback = [item.to_dict() for item in render_feedback(report, self.templates)]
        report_json = report.to_json(feedback=feedback).decode("utf-8")
        fingerprints = [
            mesh_fingerprint(obj.mesh, obj.name).to_dict()
            for obj in scene.objects
            if obj.mesh.vertex_count
        ]
        record = {
            "type": "submission",
            "submission_id": submission_id,
            "assignment_id": assignment_id,
            "received_at": datetime.now(timezone.utc).isoformat(),
            "scene_digest": hashlib.sha256(body).hexdigest(),
            "report": report.to_dict(),
            "report_json": report_json,
            "fingerprints": fingerprints,
        }
        self.store.append(record)  # acknowledged only after fsync
        self._reports[submission_id] = report_json
        response = {k: v for k, v in record.items() if k not in ("type", "report_json")}
        return 201, response

    def get_report(self, submission_id: str) -> tuple[int, str]:
        report_json = self._reports.get(submission_id)
        if report_json is None:
            raise _HTTPError(404, {"error": f"unknown submission {submission_id!r}"})
        return 200, report_json

    def assignment_stats(self, assignment_id: str) -> tuple[int, dict]:
        if assignment_id not in self._assignment_docs:
            raise _HTTPError(404, {"error": f"unknown assignment {assignment_id!r}"})
        prepared = self._prepared(assignment_id)
        stats = compute_stats(
            self.store.records(),
            {assignment_id: prepared.weights.max_score},
            assignment_id,
        )
        return 200, stats.to_dict()


_ROUTES = [
    ("POST", re.compile(r"^/v1/assignments$"), "create_assignment"),
    ("POST", re.compile(r"^/v1/assignments/([^/]+)/submissions$"), "submit"),
    ("GET", re.compile(r"^/v1/submissions/([^/]+)/report$"), "get_report"),
    ("GET", re.compile(r"^/v1/assignments/([^/]+)/stats$"), "assignment_stats"),
    ("GET", re.compile(r"^/v1/healthz$"), "healthz"),
]


class _Handler(BaseHTTPRequestHandler):
    service: GradingService  # set on the server class

    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args) -> None:  # quiet by default
        if os.environ.get("MESHGRADE_SERVICE_LOG"):
            super().log_message(format, *args)

    def _send(self, status: int, payload: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, doc: dict) -> None:
        self._send(status, json.dumps(doc).encode("utf-8"))

    def _authorized(self) -> bool:
        cfg = self.service.config
        if not cfg.secret_header:
            return True
        return self.headers.get(cfg.secret_header) == cfg.secret_value

    def _dispatch(self, method: str) -> None:
        if not self._authorized():
            self._send_json(401, {"error": "missing or wrong shared secret"})
            return
        for verb, pattern, name in _ROUTES:
            if verb != method:
                continue
            match = pattern.match(self.path)
            if not match:
                continue
            try:
                if name == "healthz":
                    self._send_json(200, {"status": "ok"})
                elif name == "create_assignment":
                    status, doc = self.service.create_assignment(self._read_body())
                    self._send_json(status, doc)
                elif name == "submit":
                    status, doc = self.service.submit(match.group(1), self._read_body())
                    self._send_json(status, doc)
                elif name == "get_report":
                    status, text = self.service.get_report(match.group(1))
                    self._send(status, text.encode("utf-8"))
                elif name == "assignment_stats":
                    status, doc = self.service.assignment_stats(match.group(1))
                    self._send_json(status, doc)
            except _HTTPError as exc:
                self._send_json(exc.status, exc.body)
            except Exception as exc:  # internal error must not kill the thread
                self._send_json(500, {"error": f"internal error: {exc}"})
            return
        self._send_json(404, {"error": f"no route for {method} {self.path}"})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length > self.service.config.size_limit:
            # Drain nothing; reject immediately.
            raise _HTTPError(
                413,
                {"error": f"body of {length} bytes exceeds limit {self.service.config.size_limit}"},
            )
        return self.rfile.read(length)

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")


def make_server(config: ServiceConfig) -> ThreadingHTTPServer:
    service = GradingService(config)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    server.service = service  # type: ignore[attr-defined]
    return server


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="meshgrade-service", description="Run the grading HTTP service."
    )
    parser.add_argument("--bind", default=os.environ.get("MESHGRADE_BIND", "127.0.0.1:8757"),
                        help="host:port to listen on")
    parser.add_argument("--store", default=os.environ.get("MESHGRADE_STORE", "meshgrade-records.log"),
                        help="path of the append-only record store")
    parser.add_argument("--size-limit", type=int,
                        default=int(os.environ.get("MESHGRADE_SIZE_LIMIT", DEFAULT_SIZE_LIMIT)),
                        help="maximum request body size in bytes")
    parser.add_argument("--secret-header", default=os.environ.get("MESHGRADE_SECRET_HEADER"),
                        help="optional shared-secret header name")
    parser.add_argument("--secret-value", default=os.environ.get("MESHGRADE_SECRET_VALUE"),
                        help="value the shared-secret header must carry")
    parser.add_argument("--templates", default=os.environ.get("MESHGRADE_TEMPLATES"),
                        help="feedback template file (defaults to the built-in English set)")
    args = parser.parse_args(argv)

    host, _, port = args.bind.rpartition(":")
    config = ServiceConfig(
        store_path=args.store,
        host=host or "127.0.0.1",
        port=int(port),
        size_limit=args.size_limit,
        secret_header=args.secret_header,
        secret_value=args.secret_value,
        templates_path=args.templates,
    )
    server = make_server(config)
    print(f"meshgrade service listening on {config.host}:{config.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
