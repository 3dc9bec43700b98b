"""Deterministic natural-language feedback rendered from a grade report.

Feedback is template-based so that every line shown to a learner is
auditable and testable. One item is produced per non-zero deduction plus
one per check that could not be assessed; major problems sort first.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .engine import CheckId, GradeReport, SubScore, check_order
from .errors import TemplateError

__all__ = [
    "Severity",
    "FeedbackItem",
    "FeedbackTemplateSet",
    "render_feedback",
    "default_templates",
    "ALLOWED_PLACEHOLDERS",
]

ALLOWED_PLACEHOLDERS = {"object", "measured", "expected", "ratio"}


class Severity(Enum):
    INFO = "info"
    MINOR = "minor"
    MAJOR = "major"


@dataclass(frozen=True, slots=True)
class FeedbackItem:
    check_id: CheckId
    severity: Severity
    message: str
    suggestion: str
    object_name: str | None = None

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id.value,
            "severity": self.severity.value,
            "message": self.message,
            "suggestion": self.suggestion,
            "object_name": self.object_name,
        }


def _check_placeholders(text: str, where: str) -> None:
    for _, name, _, _ in string.Formatter().parse(text):
        if name is None:
            continue
        if name not in ALLOWED_PLACEHOLDERS:
            raise TemplateError(f"{where}: unknown placeholder {{{name}}}")


@dataclass(frozen=True)
class FeedbackTemplateSet:
    """Message/suggestion template pair per check, keyed by check id."""

    templates: dict[CheckId, tuple[str, str]]
    locale: str = "en"

    def __post_init__(self) -> None:
        missing = [c.value for c in CheckId if c not in self.templates]
        if missing:
            raise TemplateError(f"missing template(s) for: {missing}")
        for check, (message, suggestion) in self.templates.items():
            _check_placeholders(message, f"{check.value}.message")
            _check_placeholders(suggestion, f"{check.value}.suggestion")

    @classmethod
    def from_json(cls, data: bytes | str) -> "FeedbackTemplateSet":
        """Accepts either a bare check_id -> {message, suggestion} map or
        the wrapped form {"locale": ..., "templates": {...}}."""
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise TemplateError(f"template file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise TemplateError("template file must be a JSON object")
        entries = doc.get("templates") if isinstance(doc.get("templates"), dict) else doc
        templates: dict[CheckId, tuple[str, str]] = {}
        for key, entry in entries.items():
            if key == "locale":
                continue
            try:
                check = CheckId(key)
            except ValueError as exc:
                raise TemplateError(f"unknown check id {key!r}") from exc
            if not isinstance(entry, dict) or "message" not in entry:
                raise TemplateError(f"{key}: template entry needs a 'message'")
            templates[check] = (str(entry["message"]), str(entry.get("suggestion", "")))
        return cls(templates=templates, locale=str(doc.get("locale", "en")))

    @classmethod
    def from_file(cls, path: str | Path) -> "FeedbackTemplateSet":
        return cls.from_json(Path(path).read_bytes())


def default_templates() -> FeedbackTemplateSet:
    data = resources.files("meshgrade.data").joinpath("templates_en.json").read_bytes()
    return FeedbackTemplateSet.from_json(data)


def _severity(sub: SubScore) -> Severity:
    if sub.deduction <= 0.0:
        return Severity.INFO
    if sub.weight > 0 and sub.deduction >= sub.weight / 2.0:
        return Severity.MAJOR
    return Severity.MINOR


def _context(sub: SubScore) -> dict[str, str]:
    measured = sub.measured_label or f"{sub.measured:.2f}"
    expected = sub.expected_label or f"{sub.threshold:.2f}"
    return {
        "object": sub.object_name or "scene",
        "measured": measured,
        "expected": expected,
        "ratio": f"{sub.measured:.2f}",
    }


def render_feedback(
    report: GradeReport, templates: FeedbackTemplateSet | None = None
) -> list[FeedbackItem]:
    """One item per non-zero deduction, plus an informational item per
    check that was not assessable. Pure: identical inputs render
    identical output, with major items first."""
    if templates is None:
        templates = default_templates()

    items: list[tuple[tuple, FeedbackItem]] = []
    for sub in report.subscores:
        if sub.deduction > 0.0:
            message_tpl, suggestion_tpl = templates.templates[sub.check_id]
            ctx = _context(sub)
            item = FeedbackItem(
                check_id=sub.check_id,
                severity=_severity(sub),
                message=message_tpl.format(**ctx),
                suggestion=suggestion_tpl.format(**ctx),
                object_name=sub.object_name,
            )
        elif not sub.assessable:
            reason = sub.note or "input did not carry the required data"
            item = FeedbackItem(
                check_id=sub.check_id,
                severity=Severity.INFO,
                message=f"The {sub.check_id.value} check was not assessed: {reason}.",
                suggestion="Submit in a format that includes this data to have it graded.",
                object_name=sub.object_name,
            )
        else:
            continue
        sort_key = (
            0 if item.severity is Severity.MAJOR else 1,
            check_order(item.check_id),
            item.object_name or "",
        )
        items.append((sort_key, item))

    items.sort(key=lambda pair: pair[0])
    return [item for _, item in items]
