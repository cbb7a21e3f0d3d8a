"""Chat prompt assembly for question responses.

One system message carries the video title and, when the student's toggle
was on, the subtitle excerpt around the question's timeline position; one
user message carries the question text verbatim. Assembly is deterministic
and enforces a token budget by trimming excerpt cues, never the question.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .models import DomainError, Response, ResponseKind, ValidationError, VideoRecord
from .subtitles import (
    DEFAULT_WINDOW_RADIUS_S,
    SubtitleCue,
    SubtitleTrack,
    extract_window,
    render_excerpt,
)

DEFAULT_BUDGET_TOKENS = 3000

DEFAULT_SYSTEM_PREAMBLE = (
    "You are a teaching assistant for the lecture video titled '{video_title}'. "
    "The following is the transcript near the moment the student asked: "
    "{subtitle_excerpt}. Answer the student's question in the context of this "
    "video, in the student's language."
)
DEFAULT_NO_SUBTITLE_VARIANT = (
    "You are a teaching assistant for the lecture video titled '{video_title}'. "
    "Answer the student's question in the context of this video, in the "
    "student's language."
)


class BudgetTooSmall(DomainError):
    code = "budget_too_small"


@dataclass(frozen=True)
class PromptMessage:
    role: str  # "system" | "user"
    content: str


@dataclass(frozen=True)
class PromptEnvelope:
    messages: tuple[PromptMessage, ...]
    model_id: str
    created_for_response_id: str

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))

    @property
    def system_content(self) -> str:
        return self.messages[0].content

    @property
    def user_content(self) -> str:
        return self.messages[-1].content

    def to_record(self) -> dict:
        return {
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "model_id": self.model_id,
            "created_for_response_id": self.created_for_response_id,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "PromptEnvelope":
        return cls(
            messages=tuple(
                PromptMessage(m["role"], m["content"]) for m in rec["messages"]
            ),
            model_id=rec["model_id"],
            created_for_response_id=rec["created_for_response_id"],
        )


@dataclass(frozen=True)
class PromptTemplate:
    system_preamble: str = DEFAULT_SYSTEM_PREAMBLE
    no_subtitle_variant: str = DEFAULT_NO_SUBTITLE_VARIANT
    language_tag: str = "en"

    def __post_init__(self):
        for variant in (self.system_preamble, self.no_subtitle_variant):
            if variant.count("{video_title}") != 1:
                raise ValidationError(
                    "template variants must contain {video_title} exactly once"
                )
        if self.system_preamble.count("{subtitle_excerpt}") != 1:
            raise ValidationError(
                "system_preamble must contain {subtitle_excerpt} exactly once"
            )


# Plain replacement, not str.format: titles, excerpts, and questions may
# legitimately contain braces.
def _render_system(template: PromptTemplate, video_title: str, cues: Sequence[SubtitleCue]) -> str:
    if cues:
        return template.system_preamble.replace("{video_title}", video_title).replace(
            "{subtitle_excerpt}", render_excerpt(cues)
        )
    return template.no_subtitle_variant.replace("{video_title}", video_title)


_CJK_RANGES = (
    (0x2E80, 0x303F),  # radicals, CJK punctuation
    (0x3040, 0x30FF),  # hiragana, katakana
    (0x3130, 0x318F),  # hangul jamo
    (0x3400, 0x4DBF),  # CJK extension A
    (0x4E00, 0x9FFF),  # CJK unified
    (0xAC00, 0xD7AF),  # hangul syllables
    (0xF900, 0xFAFF),  # CJK compatibility
    (0xFF00, 0xFFEF),  # full/half-width forms
)


def _contains_cjk(text: str) -> bool:
    return any(lo <= ord(ch) <= hi for ch in text for lo, hi in _CJK_RANGES)


def estimate_tokens(text: str) -> int:
    """Deterministic overestimate-leaning token count heuristic.

    CJK-bearing text averages roughly one token per two codepoints, other
    text one per four. Pluggable at the service level; this is the default.
    """
    if not text:
        return 0
    divisor = 2 if _contains_cjk(text) else 4
    return math.ceil(len(text) / divisor)


def envelope_token_estimate(envelope: PromptEnvelope) -> int:
    return sum(estimate_tokens(m.content) for m in envelope.messages)


def _center_cue_index(cues: Sequence[SubtitleCue], center_s: float) -> Optional[int]:
    center_ms = center_s * 1000.0
    for i, cue in enumerate(cues):
        if cue.start_ms <= center_ms <= cue.end_ms:
            return i
    return None


def enforce_token_budget(
    envelope: PromptEnvelope,
    excerpt_cues: Sequence[SubtitleCue],
    budget_tokens: int,
    template: PromptTemplate,
    video_title: str,
    center_s: float,
) -> PromptEnvelope:
    """Trim the excerpt until the envelope fits the budget, or raise.

    Cues are dropped from the excerpt's outer edges, alternating earliest
    then latest. The cue overlapping `center_s` (if any) is the last ever
    dropped; the question text is never truncated. With no cues left the
    system message falls back to the no-subtitle variant; if that still
    exceeds the budget, BudgetTooSmall.
    """
    if budget_tokens <= 0:
        raise BudgetTooSmall("budget must be positive")
    if envelope_token_estimate(envelope) <= budget_tokens:
        return envelope

    cues = list(excerpt_cues)
    center_idx = _center_cue_index(cues, center_s)
    lo, hi = 0, len(cues) - 1
    drop_earliest = True
    while lo <= hi:
        if lo == hi:
            lo += 1  # last cue standing (the center one, when present)
        elif drop_earliest:
            if lo == center_idx:
                hi -= 1
            else:
                lo += 1
        else:
            if hi == center_idx:
                lo += 1
            else:
                hi -= 1
        drop_earliest = not drop_earliest

        remaining = cues[lo:hi + 1]
        candidate = PromptEnvelope(
            messages=(
                PromptMessage("system", _render_system(template, video_title, remaining)),
                envelope.messages[-1],
            ),
            model_id=envelope.model_id,
            created_for_response_id=envelope.created_for_response_id,
        )
        if envelope_token_estimate(candidate) <= budget_tokens:
            return candidate
    raise BudgetTooSmall(
        f"prompt exceeds {budget_tokens} tokens even without any subtitle excerpt"
    )


def build_prompt(
    video: VideoRecord,
    question: Response,
    track: Optional[SubtitleTrack],
    template: PromptTemplate,
    budget_tokens: int = DEFAULT_BUDGET_TOKENS,
    radius_s: float = DEFAULT_WINDOW_RADIUS_S,
    model_id: str = "",
) -> PromptEnvelope:
    """Assemble the two-message envelope for a question response.

    The subtitle excerpt is included only when the student's toggle was on
    and the track yields a non-empty window; an empty window behaves like
    the toggle-off case. Identical inputs produce identical envelopes.
    """
    if question.kind is not ResponseKind.QUESTION:
        raise ValueError("build_prompt requires a Question response")
    if question.question_text is None:
        raise ValueError("question has no text")

    cues: list[SubtitleCue] = []
    if question.include_subtitles and track is not None:
        cues = extract_window(track, question.timeline_s, radius_s)

    envelope = PromptEnvelope(
        messages=(
            PromptMessage("system", _render_system(template, video.title, cues)),
            PromptMessage("user", question.question_text),
        ),
        model_id=model_id,
        created_for_response_id=question.response_id,
    )
    return enforce_token_budget(
        envelope,
        cues,
        budget_tokens,
        template=template,
        video_title=video.title,
        center_s=question.timeline_s,
    )
