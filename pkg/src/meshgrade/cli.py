"""Command-line front end: single grading, parallel batch grading,
duplicate scans and scene validation.

Exit codes are a stable contract: 0 success, 2 input error,
3 configuration error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .engine import (
    CheckId,
    GradeOptions,
    GradeReport,
    PreparedRubric,
    Rubric,
    WeightTable,
    grade,
    load_rubric,
    prepare_rubric,
)
from .errors import ConfigurationError, MeshgradeError, TemplateError
from .feedback import FeedbackTemplateSet, default_templates, render_feedback
from .ingest import parse_scene_file, validate_scene
from .similarity import scan_duplicates

__all__ = ["main", "BatchSummary"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4

HISTOGRAM_BINS = 10
SUBMISSION_PATTERNS = ("*.sgf.json", "*.obj")


@dataclass
class BatchSummary:
    """Aggregate view of one batch run: counts, failures, a 10-bin score
    histogram and per-check failure totals."""

    total: int = 0
    graded: int = 0
    failed: list[tuple[str, str]] = field(default_factory=list)
    score_histogram: list[int] = field(default_factory=lambda: [0] * HISTOGRAM_BINS)
    per_check_failure_counts: dict[str, int] = field(
        default_factory=lambda: {c.value: 0 for c in CheckId}
    )

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "graded": self.graded,
            "failed": [{"file": f, "error": e} for f, e in self.failed],
            "score_histogram": self.score_histogram,
            "per_check_failure_counts": self.per_check_failure_counts,
        }


class _InputError(MeshgradeError):
    pass


def _load_rubric_file(path: str) -> Rubric:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read rubric {path}: {exc}") from exc
    return load_rubric(data, base_dir=Path(path).parent)


def _apply_weight_override(rubric: Rubric, weights_path: str | None) -> Rubric:
    if not weights_path:
        return rubric
    try:
        data = json.loads(Path(weights_path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read weights {weights_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"weights file is not valid JSON: {exc}") from exc
    return Rubric(
        scene=rubric.scene,
        weights=WeightTable.from_dict(data),
        tolerances=rubric.tolerances,
        use_declared_primitive=rubric.use_declared_primitive,
    )


def _load_submission(path: str):
    try:
        scene, report = parse_scene_file(path)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    if scene is None:
        raise _InputError(f"{path} is not a valid scene:\n{report}")
    semantic = validate_scene(scene)
    if not semantic.ok:
        raise _InputError(f"{path} failed validation:\n{semantic}")
    return scene


def _templates_from(args) -> FeedbackTemplateSet:
    path = args.templates or os.environ.get("MESHGRADE_TEMPLATES")
    if path:
        return FeedbackTemplateSet.from_file(path)
    return default_templates()


def _submission_id_for(path: Path, explicit: str | None = None) -> str:
    if explicit:
        return explicit
    name = path.name
    for suffix in (".sgf.json", ".obj", ".json"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _report_text(report: GradeReport, feedback: list[dict]) -> str:
    lines = [f"score: {report.score:.2f}"]
    for sub in report.subscores:
        if sub.deduction > 0:
            target = f" on {sub.object_name!r}" if sub.object_name else ""
            lines.append(f"  -{sub.deduction:g} {sub.check_id.value}{target}")
        elif not sub.assessable:
            lines.append(f"  (not assessed) {sub.check_id.value}: {sub.note}")
    for item in feedback:
        lines.append(f"{item['severity']}: {item['message']}")
    return "\n".join(lines) + "\n"


def _report_csv(report: GradeReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["submission_id", "score"] + [c.value for c in CheckId])
    writer.writerow(
        [report.submission_id, f"{report.score:.2f}"]
        + [f"{report.deduction_total(c):.2f}" for c in CheckId]
    )
    return buf.getvalue()


def _emit(content: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(content)
    else:
        sys.stdout.buffer.write(content)
        if not content.endswith(b"\n"):
            sys.stdout.write("\n")


def _cmd_grade(args) -> int:
    rubric = _apply_weight_override(_load_rubric_file(args.rubric), args.weights)
    templates = _templates_from(args)
    scene = _load_submission(args.submission)
    submission_path = Path(args.submission)
    options = None
    if submission_path.suffix.lower() == ".obj":
        options = GradeOptions(assess_pose=False, assess_scale=False, assess_camera=False)
    report = grade(
        scene,
        rubric,
        options=options,
        submission_id=_submission_id_for(submission_path, args.submission_id),
        rubric_id=args.rubric_id or _submission_id_for(Path(args.rubric)),
    )
    feedback = [item.to_dict() for item in render_feedback(report, templates)]
    if args.format == "json":
        # Compact form, byte-identical to what the grading service stores.
        _emit(report.to_json(feedback=feedback), args.out)
    elif args.format == "csv":
        _emit(_report_csv(report).encode(), args.out)
    else:
        _emit(_report_text(report, feedback).encode(), args.out)
    return EXIT_OK


# Batch workers rebuild the prepared rubric once per process, not per task.
_WORKER_PREPARED: PreparedRubric | None = None
_WORKER_RUBRIC_ID = ""


def _batch_worker_init(rubric_path: str, weights_path: str | None, rubric_id: str) -> None:
    global _WORKER_PREPARED, _WORKER_RUBRIC_ID
    _WORKER_PREPARED = prepare_rubric(
        _apply_weight_override(_load_rubric_file(rubric_path), weights_path)
    )
    _WORKER_RUBRIC_ID = rubric_id


def _batch_worker(path_str: str) -> tuple[str, dict | None, str | None]:
    """Grade one file; never raises. Returns (file, report dict, error)."""
    path = Path(path_str)
    try:
        scene = _load_submission(path_str)
        options = None
        if path.suffix.lower() == ".obj":
            options = GradeOptions(assess_pose=False, assess_scale=False, assess_camera=False)
        report = grade(
            scene,
            _WORKER_PREPARED,
            options=options,
            submission_id=_submission_id_for(path),
            rubric_id=_WORKER_RUBRIC_ID,
        )
        return path.name, report.to_dict(), None
    except MeshgradeError as exc:
        return path.name, None, str(exc)
    except Exception as exc:
        return path.name, None, f"internal error: {exc}"


def _candidate_files(directory: Path) -> list[Path]:
    files: set[Path] = set()
    for pattern in SUBMISSION_PATTERNS:
        files.update(directory.glob(pattern))
    return sorted(files, key=lambda p: p.name)


def _summary_rows(
    results: list[tuple[str, dict | None, str | None]], max_score: float
) -> tuple[list[list[str]], BatchSummary]:
    summary = BatchSummary(total=len(results))
    rows: list[list[str]] = []
    for fname, report, error in results:
        if report is None:
            summary.failed.append((fname, error or "unknown error"))
            continue
        summary.graded += 1
        per_check = {c.value: 0.0 for c in CheckId}
        for sub in report["subscores"]:
            per_check[sub["check_id"]] += sub["deduction"]
        for check in {s["check_id"] for s in report["subscores"] if s["deduction"] > 0}:
            summary.per_check_failure_counts[check] += 1
        rows.append(
            [fname, report["submission_id"], f"{report['score']:.2f}"]
            + [f"{per_check[c.value]:.2f}" for c in CheckId]
        )
        bin_idx = int(report["score"] / max_score * HISTOGRAM_BINS)
        summary.score_histogram[min(max(bin_idx, 0), HISTOGRAM_BINS - 1)] += 1
    return rows, summary


def _write_summary_csv(rows: list[list[str]], path: str | None) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["file", "submission_id", "score"] + [c.value for c in CheckId])
    writer.writerows(rows)
    content = buf.getvalue().encode()
    if path:
        Path(path).write_bytes(content)
    return content


def _cmd_batch(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise _InputError(f"{args.dir} is not a directory")
    files = _candidate_files(directory)
    if not files:
        raise _InputError(f"no *.sgf.json or *.obj files in {args.dir}")

    # Validate the rubric up front so a config error fails fast with exit 3.
    rubric_id = _submission_id_for(Path(args.rubric))
    rubric = _apply_weight_override(_load_rubric_file(args.rubric), args.weights)
    max_score = rubric.weights.max_score

    jobs = max(1, args.jobs)
    paths = [str(p) for p in files]
    if jobs == 1:
        _batch_worker_init(args.rubric, args.weights, rubric_id)
        results = [_batch_worker(p) for p in paths]
    else:
        chunk = max(1, len(paths) // (jobs * 4))
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_batch_worker_init,
            initargs=(args.rubric, args.weights, rubric_id),
        ) as pool:
            results = list(pool.map(_batch_worker, paths, chunksize=chunk))

    results.sort(key=lambda r: r[0])
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for fname, report, _error in results:
            if report is not None:
                target = out_dir / f"{report['submission_id']}.report.json"
                target.write_bytes(json.dumps(report, indent=2).encode())

    rows, summary = _summary_rows(results, max_score)
    content = _write_summary_csv(rows, args.summary)
    if not args.summary:
        sys.stdout.buffer.write(content)
    print(
        f"graded {summary.graded}/{summary.total} files"
        + (f", {len(summary.failed)} failed" if summary.failed else ""),
        file=sys.stderr,
    )
    for fname, error in summary.failed:
        print(f"  failed {fname}: {error.splitlines()[0]}", file=sys.stderr)
    if args.summary_json:
        Path(args.summary_json).write_text(json.dumps(summary.to_dict(), indent=2))
    return EXIT_OK


def _cmd_dupes(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        raise _InputError(f"{args.dir} is not a directory")
    submissions = []
    for path in _candidate_files(directory):
        try:
            scene = _load_submission(str(path))
        except _InputError as exc:
            print(f"skipping {path.name}: {str(exc).splitlines()[0]}", file=sys.stderr)
            continue
        submissions.append((_submission_id_for(path), scene))
    if len(submissions) < 2:
        raise _InputError("need at least 2 parseable submissions to scan for duplicates")
    exclude = None
    if args.exclude_rubric:
        exclude = _load_rubric_file(args.exclude_rubric).scene
    report = scan_duplicates(submissions, exclude=exclude)
    _emit(json.dumps(report.to_dict(), indent=2).encode(), args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        scene, report = parse_scene_file(args.scene)
    except OSError as exc:
        raise _InputError(f"cannot read {args.scene}: {exc}") from exc
    if scene is not None:
        report.extend(validate_scene(scene))
    doc = report.to_dict()
    doc["valid"] = scene is not None and report.ok
    if scene is not None:
        doc["objects"] = [
            {
                "name": obj.name,
                "vertices": obj.mesh.vertex_count,
                "faces": obj.mesh.face_count,
            }
            for obj in scene.objects
        ]
        doc["cameras"] = [cam.name for cam in scene.cameras]
    print(json.dumps(doc, indent=2))
    return EXIT_OK if doc["valid"] else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshgrade",
        description="Grade 3D modeling assignment scenes against a rubric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_grade = sub.add_parser("grade", help="grade a single submission")
    p_grade.add_argument("--rubric", required=True)
    p_grade.add_argument("--submission", required=True)
    p_grade.add_argument("--weights", help="JSON file overriding the rubric's weight table")
    p_grade.add_argument("--templates", help="feedback template file (or MESHGRADE_TEMPLATES)")
    p_grade.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p_grade.add_argument("--out", help="write the report here instead of stdout")
    p_grade.add_argument("--submission-id", help="override the submission id (default: file stem)")
    p_grade.add_argument("--rubric-id", help="override the rubric id (default: file stem)")
    p_grade.set_defaults(func=_cmd_grade)

    p_batch = sub.add_parser("batch", help="grade every submission in a directory")
    p_batch.add_argument("--rubric", required=True)
    p_batch.add_argument("--dir", required=True)
    p_batch.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p_batch.add_argument("--weights")
    p_batch.add_argument("--out-dir", help="write one report JSON per graded file")
    p_batch.add_argument("--summary", help="write the summary CSV here instead of stdout")
    p_batch.add_argument("--summary-json", help="also write the batch summary as JSON")
    p_batch.set_defaults(func=_cmd_batch)

    p_dupes = sub.add_parser("dupes", help="scan a directory for copied meshes")
    p_dupes.add_argument("--dir", required=True)
    p_dupes.add_argument("--exclude-rubric", help="rubric whose template geometry never counts")
    p_dupes.add_argument("--out")
    p_dupes.set_defaults(func=_cmd_dupes)

    p_validate = sub.add_parser("validate", help="parse and validate a scene file")
    p_validate.add_argument("--scene", required=True)
    p_validate.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, TemplateError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (_InputError, MeshgradeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
