"""Domain types shared across the service: videos, users, responses, replies,
teacher annotations, and watch events, plus their validity rules.

All types are immutable value objects; the persistence layer owns id
generation and timestamps. Canonical serialized form of every type is a flat
dict with snake_case keys matching the field names.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping, Optional

DEFAULT_MAX_QUESTION_CHARS = 2000

# Auto-generated captions may overrun the reported video length slightly.
CUE_OVERRUN_SLACK_S = 5.0


def utc_now_iso() -> str:
    """Current UTC wall-clock time, millisecond resolution, ISO-8601.

    Fixed-width so that lexicographic order equals chronological order.
    """
    now = datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%S.") + f"{now.microsecond // 1000:03d}Z"


class Role(str, Enum):
    STUDENT = "student"
    TEACHER = "teacher"


class ResponseKind(str, Enum):
    INTERESTING = "Interesting"
    IMPORTANT = "Important"
    DIFFICULT = "Difficult"
    QUESTION = "Question"


class AuthorKind(str, Enum):
    ASSISTANT = "assistant"
    TEACHER = "teacher"
    STUDENT = "student"


class WatchEventKind(str, Enum):
    START_WATCHING = "start_watching"
    STOP_WATCHING = "stop_watching"
    RESPONSE_PUT = "response_put"


class AnnotationKind(str, Enum):
    STEERING_MARK = "steering_mark"
    CAPTION = "caption"


class DomainError(Exception):
    """Base class for domain rule violations. `code` is stable and wire-safe."""

    code = "domain_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


class ValidationError(DomainError):
    code = "validation_error"


class UnknownKind(ValidationError):
    code = "unknown_kind"


class MissingQuestionText(ValidationError):
    code = "missing_question_text"


class UnexpectedText(ValidationError):
    code = "unexpected_text"


class TimelineOutOfRange(ValidationError):
    code = "timeline_out_of_range"


class QuestionTooLong(ValidationError):
    code = "question_too_long"


class InvalidAnnotation(ValidationError):
    code = "invalid_annotation"


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    title: str
    external_source_id: str
    duration_s: float
    group_ids: frozenset[str] = field(default_factory=frozenset)
    subtitle_track_id: Optional[str] = None

    def __post_init__(self):
        if not self.title:
            raise ValidationError("video title must be non-empty")
        if not (self.duration_s >= 0):
            raise ValidationError("video duration must be >= 0")
        object.__setattr__(self, "group_ids", frozenset(self.group_ids))

    def to_record(self) -> dict[str, Any]:
        return {
            "video_id": self.video_id,
            "title": self.title,
            "external_source_id": self.external_source_id,
            "duration_s": self.duration_s,
            "group_ids": sorted(self.group_ids),
            "subtitle_track_id": self.subtitle_track_id,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "VideoRecord":
        return cls(
            video_id=rec["video_id"],
            title=rec["title"],
            external_source_id=rec["external_source_id"],
            duration_s=float(rec["duration_s"]),
            group_ids=frozenset(rec.get("group_ids") or ()),
            subtitle_track_id=rec.get("subtitle_track_id"),
        )


@dataclass(frozen=True)
class User:
    user_id: str
    role: Role
    group_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "group_ids", frozenset(self.group_ids))

    def to_record(self) -> dict[str, Any]:
        return {
            "user_id": self.user_id,
            "role": self.role.value,
            "group_ids": sorted(self.group_ids),
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "User":
        return cls(
            user_id=rec["user_id"],
            role=Role(rec["role"]),
            group_ids=frozenset(rec.get("group_ids") or ()),
        )


@dataclass(frozen=True)
class Response:
    response_id: str
    user_id: str
    video_id: str
    timeline_s: float
    kind: ResponseKind
    question_text: Optional[str]
    include_subtitles: bool
    created_at: str

    def to_record(self) -> dict[str, Any]:
        return {
            "response_id": self.response_id,
            "user_id": self.user_id,
            "video_id": self.video_id,
            "timeline_s": self.timeline_s,
            "kind": self.kind.value,
            "question_text": self.question_text,
            "include_subtitles": self.include_subtitles,
            "created_at": self.created_at,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Response":
        return cls(
            response_id=rec["response_id"],
            user_id=rec["user_id"],
            video_id=rec["video_id"],
            timeline_s=float(rec["timeline_s"]),
            kind=ResponseKind(rec["kind"]),
            question_text=rec.get("question_text"),
            include_subtitles=bool(rec.get("include_subtitles", False)),
            created_at=rec["created_at"],
        )


@dataclass(frozen=True)
class Reply:
    reply_id: str
    response_id: str
    author_kind: AuthorKind
    author_id: Optional[str]
    body: str
    prompt_snapshot: Optional[str]  # snapshot blob reference, assistant only
    model_id: Optional[str]
    created_at: str

    def __post_init__(self):
        object.__setattr__(self, "author_kind", AuthorKind(self.author_kind))
        if not self.body:
            raise ValidationError("reply body must be non-empty")
        is_assistant = self.author_kind is AuthorKind.ASSISTANT
        has_snapshot = self.prompt_snapshot is not None and self.model_id is not None
        if is_assistant != has_snapshot:
            raise ValidationError(
                "prompt_snapshot and model_id are present exactly for assistant replies"
            )
        if is_assistant and self.author_id is not None:
            raise ValidationError("assistant replies carry no author_id")

    def to_record(self) -> dict[str, Any]:
        return {
            "reply_id": self.reply_id,
            "response_id": self.response_id,
            "author_kind": self.author_kind.value,
            "author_id": self.author_id,
            "body": self.body,
            "prompt_snapshot": self.prompt_snapshot,
            "model_id": self.model_id,
            "created_at": self.created_at,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Reply":
        return cls(
            reply_id=rec["reply_id"],
            response_id=rec["response_id"],
            author_kind=AuthorKind(rec["author_kind"]),
            author_id=rec.get("author_id"),
            body=rec["body"],
            prompt_snapshot=rec.get("prompt_snapshot"),
            model_id=rec.get("model_id"),
            created_at=rec["created_at"],
        )


@dataclass(frozen=True)
class WatchEvent:
    event_id: str
    user_id: str
    video_id: str
    kind: WatchEventKind
    timeline_s: float
    created_at: str
    response_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", WatchEventKind(self.kind))
        has_ref = self.response_id is not None
        if (self.kind is WatchEventKind.RESPONSE_PUT) != has_ref:
            raise ValidationError("response_id is present exactly for response_put events")

    def to_record(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "user_id": self.user_id,
            "video_id": self.video_id,
            "kind": self.kind.value,
            "timeline_s": self.timeline_s,
            "created_at": self.created_at,
            "response_id": self.response_id,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "WatchEvent":
        return cls(
            event_id=rec["event_id"],
            user_id=rec["user_id"],
            video_id=rec["video_id"],
            kind=WatchEventKind(rec["kind"]),
            timeline_s=float(rec["timeline_s"]),
            created_at=rec["created_at"],
            response_id=rec.get("response_id"),
        )


@dataclass(frozen=True)
class TeacherAnnotation:
    annotation_id: str
    video_id: str
    kind: AnnotationKind
    timeline_start_s: float
    timeline_end_s: Optional[float]
    body: str

    def __post_init__(self):
        object.__setattr__(self, "kind", AnnotationKind(self.kind))

    def to_record(self) -> dict[str, Any]:
        return {
            "annotation_id": self.annotation_id,
            "video_id": self.video_id,
            "kind": self.kind.value,
            "timeline_start_s": self.timeline_start_s,
            "timeline_end_s": self.timeline_end_s,
            "body": self.body,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "TeacherAnnotation":
        return cls(
            annotation_id=rec["annotation_id"],
            video_id=rec["video_id"],
            kind=AnnotationKind(rec["kind"]),
            timeline_start_s=float(rec["timeline_start_s"]),
            timeline_end_s=(
                float(rec["timeline_end_s"]) if rec.get("timeline_end_s") is not None else None
            ),
            body=rec["body"],
        )


def validate_response(
    candidate: Mapping[str, Any],
    video: VideoRecord,
    max_question_chars: int = DEFAULT_MAX_QUESTION_CHARS,
) -> Response:
    """Normalize a response-shaped record against a video, or raise.

    Out-of-range timelines are rejected, never clamped. Question text is
    stripped of surrounding whitespace; non-Question kinds must carry none.
    """
    raw_kind = candidate.get("kind")
    try:
        kind = ResponseKind(raw_kind)
    except ValueError:
        raise UnknownKind(f"unknown response kind: {raw_kind!r}")

    raw_timeline = candidate.get("timeline_s")
    try:
        timeline_s = float(raw_timeline)
    except (TypeError, ValueError):
        raise TimelineOutOfRange(f"timeline_s is not a number: {raw_timeline!r}")
    if math.isnan(timeline_s) or not (0.0 <= timeline_s <= video.duration_s):
        raise TimelineOutOfRange(
            f"timeline {timeline_s} outside [0, {video.duration_s}]"
        )

    text = candidate.get("question_text")
    if kind is ResponseKind.QUESTION:
        text = (text or "").strip()
        if not text:
            raise MissingQuestionText("Question responses require question_text")
        if len(text) > max_question_chars:
            raise QuestionTooLong(
                f"question text exceeds {max_question_chars} characters"
            )
        include_subtitles = bool(candidate.get("include_subtitles", False))
    else:
        if text is not None and str(text).strip():
            raise UnexpectedText(f"{kind.value} responses carry no text")
        text = None
        include_subtitles = False

    return Response(
        response_id=candidate.get("response_id", ""),
        user_id=candidate.get("user_id", ""),
        video_id=video.video_id,
        timeline_s=timeline_s,
        kind=kind,
        question_text=text,
        include_subtitles=include_subtitles,
        created_at=candidate.get("created_at", ""),
    )


def validate_annotation(
    candidate: Mapping[str, Any], video: VideoRecord
) -> TeacherAnnotation:
    """Check teacher annotation shape: captions span a range, marks are points."""
    raw_kind = candidate.get("kind")
    try:
        kind = AnnotationKind(raw_kind)
    except ValueError:
        raise InvalidAnnotation(f"unknown annotation kind: {raw_kind!r}")

    body = (candidate.get("body") or "").strip()
    if not body:
        raise InvalidAnnotation("annotation body must be non-empty")

    try:
        start = float(candidate.get("timeline_start_s"))
    except (TypeError, ValueError):
        raise InvalidAnnotation("timeline_start_s is not a number")
    if math.isnan(start) or not (0.0 <= start <= video.duration_s):
        raise InvalidAnnotation(f"start {start} outside [0, {video.duration_s}]")

    end_raw = candidate.get("timeline_end_s")
    if kind is AnnotationKind.CAPTION:
        try:
            end = float(end_raw)
        except (TypeError, ValueError):
            raise InvalidAnnotation("captions require timeline_end_s")
        if math.isnan(end) or not (start < end):
            raise InvalidAnnotation("captions require timeline_start_s < timeline_end_s")
    else:
        if end_raw is not None:
            raise InvalidAnnotation("steering marks carry no end time")
        end = None

    return TeacherAnnotation(
        annotation_id=candidate.get("annotation_id", ""),
        video_id=video.video_id,
        kind=kind,
        timeline_start_s=start,
        timeline_end_s=end,
        body=body,
    )


def shares_group(user: User, video: VideoRecord) -> bool:
    return bool(user.group_ids & video.group_ids)


def can_see_response(viewer: User, author: User) -> bool:
    """Students see users sharing at least one group; teachers see everything."""
    if viewer.role is Role.TEACHER:
        return True
    if viewer.user_id == author.user_id:
        return True
    return bool(viewer.group_ids & author.group_ids)
