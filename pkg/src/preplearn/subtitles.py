"""WebVTT/SRT parsing, serialization, and time-window extraction.

Tracks are immutable after parse. Cue text is plain text: markup tags are
stripped and cue-internal newlines are collapsed to single spaces, which is
lossy by design (prompt assembly needs plain text). File ingestion is the
supported subtitle source; `CaptionServerClient` is an optional remote
adapter behind the same interface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

import httpx

from .models import CUE_OVERRUN_SLACK_S, DomainError, ValidationError, VideoRecord

DEFAULT_WINDOW_RADIUS_S = 30.0


class SubtitleParseError(DomainError):
    code = "subtitle_parse_error"

    def __init__(self, message: str = "", line_no: Optional[int] = None):
        super().__init__(message)
        self.line_no = line_no


class MissingHeader(SubtitleParseError):
    code = "missing_header"


class MalformedTimestamp(SubtitleParseError):
    code = "malformed_timestamp"


class EmptyDocument(SubtitleParseError):
    code = "empty_document"


class RemoteUnavailable(DomainError):
    code = "remote_unavailable"


class NoTrackForLanguage(DomainError):
    code = "no_track_for_language"


class CueBeyondVideoEnd(ValidationError):
    code = "cue_beyond_video_end"


@dataclass(frozen=True)
class SubtitleCue:
    start_ms: int
    end_ms: int
    text: str

    def __post_init__(self):
        if self.start_ms < 0:
            raise ValidationError("cue start must be non-negative")
        if not (self.start_ms < self.end_ms):
            raise ValidationError("cue start must be before cue end")
        if not self.text:
            raise ValidationError("cue text must be non-empty")


@dataclass(frozen=True)
class SubtitleTrack:
    track_id: str
    video_id: str
    language_tag: str
    cues: tuple[SubtitleCue, ...]
    source_format: str  # "webvtt" | "srt"

    def __post_init__(self):
        object.__setattr__(self, "cues", tuple(self.cues))

    def to_record(self) -> dict:
        return {
            "track_id": self.track_id,
            "video_id": self.video_id,
            "language_tag": self.language_tag,
            "source_format": self.source_format,
            "cues": [
                {"start_ms": c.start_ms, "end_ms": c.end_ms, "text": c.text}
                for c in self.cues
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SubtitleTrack":
        return cls(
            track_id=rec["track_id"],
            video_id=rec["video_id"],
            language_tag=rec["language_tag"],
            cues=tuple(
                SubtitleCue(c["start_ms"], c["end_ms"], c["text"]) for c in rec["cues"]
            ),
            source_format=rec["source_format"],
        )


# Timing lines: "start --> end", settings after the end timestamp ignored.
_TIMING_SPLIT = re.compile(r"[ \t]+-->[ \t]+")
_VTT_TS = re.compile(r"^(?:(\d{1,5}):)?(\d{1,2}):(\d{2})\.(\d{3})$")
_SRT_TS = re.compile(r"^(\d{1,5}):(\d{1,2}):(\d{2}),(\d{3})$")
_MARKUP = re.compile(r"<[^>]*>")
_NEWLINES = re.compile(r"[\r\n]+")


def _normalize_lines(document: str) -> list[str]:
    return document.lstrip("﻿").replace("\r\n", "\n").replace("\r", "\n").split("\n")


def _parse_timestamp(token: str, pattern: re.Pattern, line_no: int) -> int:
    m = pattern.match(token.strip())
    if not m:
        raise MalformedTimestamp(f"bad timestamp {token.strip()!r} on line {line_no}", line_no)
    hours = int(m.group(1)) if m.group(1) else 0
    minutes, seconds, millis = int(m.group(2)), int(m.group(3)), int(m.group(4))
    if minutes > 59 or seconds > 59:
        raise MalformedTimestamp(
            f"minutes/seconds out of range on line {line_no}", line_no
        )
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis


def _parse_timing_line(line: str, pattern: re.Pattern, line_no: int) -> tuple[int, int]:
    parts = _TIMING_SPLIT.split(line.strip(), maxsplit=1)
    if len(parts) != 2:
        raise MalformedTimestamp(f"bad timing line on line {line_no}", line_no)
    start_token = parts[0]
    # Cue settings (alignment, position, ...) may follow the end timestamp.
    end_token = parts[1].split()[0] if parts[1].split() else ""
    start_ms = _parse_timestamp(start_token, pattern, line_no)
    end_ms = _parse_timestamp(end_token, pattern, line_no)
    if start_ms >= end_ms:
        raise MalformedTimestamp(
            f"start is not before end on line {line_no}", line_no
        )
    return start_ms, end_ms


def _clean_text(lines: Iterable[str]) -> str:
    joined = " ".join(lines)
    joined = _MARKUP.sub("", joined)
    joined = _NEWLINES.sub(" ", joined)
    return re.sub(r"  +", " ", joined).strip()


def _blocks(lines: list[str]) -> Iterable[tuple[int, list[str]]]:
    """Yield (first_line_no, block_lines) for blank-line separated blocks."""
    block: list[str] = []
    start_no = 1
    for i, line in enumerate(lines, start=1):
        if line.strip():
            if not block:
                start_no = i
            block.append(line)
        elif block:
            yield start_no, block
            block = []
    if block:
        yield start_no, block


def _collect_cue(
    block: list[str], block_no: int, pattern: re.Pattern, allow_id_line: bool
) -> Optional[SubtitleCue]:
    timing_idx = None
    if "-->" in block[0]:
        timing_idx = 0
    elif allow_id_line and len(block) > 1 and "-->" in block[1]:
        timing_idx = 1
    if timing_idx is None:
        return None  # metadata / stray block, not a cue
    start_ms, end_ms = _parse_timing_line(
        block[timing_idx], pattern, block_no + timing_idx
    )
    text = _clean_text(block[timing_idx + 1:])
    if not text:
        return None  # auto-captions emit empty filler cues; drop them
    return SubtitleCue(start_ms=start_ms, end_ms=end_ms, text=text)


def _sorted_cues(cues: list[SubtitleCue]) -> tuple[SubtitleCue, ...]:
    return tuple(sorted(cues, key=lambda c: (c.start_ms, c.end_ms)))


def parse_webvtt(
    document: str,
    track_id: str = "",
    video_id: str = "",
    language_tag: str = "",
) -> SubtitleTrack:
    """Parse a WebVTT document into a track sorted by cue start.

    NOTE/STYLE/REGION blocks and cue identifier lines are ignored; cue
    settings after the end timestamp are discarded.
    """
    if not document or not document.strip():
        raise EmptyDocument("document is empty")
    lines = _normalize_lines(document)
    header = lines[0].strip()
    if not (header == "WEBVTT" or header.startswith(("WEBVTT ", "WEBVTT\t"))):
        raise MissingHeader("document does not start with WEBVTT", line_no=1)

    cues: list[SubtitleCue] = []
    for block_no, block in _blocks(lines):
        first = block[0].strip()
        if block_no == 1 or first.startswith(("NOTE", "STYLE", "REGION")):
            # Header block (may carry metadata lines) or non-cue block.
            continue
        cue = _collect_cue(block, block_no, _VTT_TS, allow_id_line=True)
        if cue is not None:
            cues.append(cue)
    return SubtitleTrack(
        track_id=track_id,
        video_id=video_id,
        language_tag=language_tag,
        cues=_sorted_cues(cues),
        source_format="webvtt",
    )


def parse_srt(
    document: str,
    track_id: str = "",
    video_id: str = "",
    language_tag: str = "",
) -> SubtitleTrack:
    """Parse an SRT document. Counter lines are ignored and re-derived on output."""
    if not document or not document.strip():
        raise EmptyDocument("document is empty")
    lines = _normalize_lines(document)

    cues: list[SubtitleCue] = []
    for block_no, block in _blocks(lines):
        if block[0].strip().isdigit() and len(block) > 1:
            block = block[1:]
            block_no += 1
        cue = _collect_cue(block, block_no, _SRT_TS, allow_id_line=False)
        if cue is not None:
            cues.append(cue)
    return SubtitleTrack(
        track_id=track_id,
        video_id=video_id,
        language_tag=language_tag,
        cues=_sorted_cues(cues),
        source_format="srt",
    )


def parse_track(
    document: str,
    source_format: str,
    track_id: str = "",
    video_id: str = "",
    language_tag: str = "",
) -> SubtitleTrack:
    if source_format in ("webvtt", "vtt"):
        return parse_webvtt(document, track_id, video_id, language_tag)
    if source_format == "srt":
        return parse_srt(document, track_id, video_id, language_tag)
    raise ValidationError(f"unknown subtitle format: {source_format!r}")


def _format_ts(ms: int, sep: str) -> str:
    hours, rem = divmod(ms, 3_600_000)
    minutes, rem = divmod(rem, 60_000)
    seconds, millis = divmod(rem, 1000)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d}{sep}{millis:03d}"


def serialize_webvtt(track: SubtitleTrack) -> str:
    """Serialize with LF line endings and full-hour timestamps."""
    parts = ["WEBVTT", ""]
    for cue in track.cues:
        parts.append(f"{_format_ts(cue.start_ms, '.')} --> {_format_ts(cue.end_ms, '.')}")
        parts.append(cue.text)
        parts.append("")
    return "\n".join(parts)


def serialize_srt(track: SubtitleTrack) -> str:
    parts = []
    for counter, cue in enumerate(track.cues, start=1):
        parts.append(str(counter))
        parts.append(f"{_format_ts(cue.start_ms, ',')} --> {_format_ts(cue.end_ms, ',')}")
        parts.append(cue.text)
        parts.append("")
    return "\n".join(parts)


def extract_window(
    track: SubtitleTrack,
    center_s: float,
    radius_s: float = DEFAULT_WINDOW_RADIUS_S,
) -> list[SubtitleCue]:
    """Cues overlapping the closed interval [max(0, center-radius), center+radius].

    Overlap (not containment) semantics; the window clamps at 0 and is not
    re-centered near the video start. Depends only on timeline positions.
    """
    if radius_s <= 0:
        raise ValueError("radius_s must be positive")
    if center_s < 0:
        raise ValueError("center_s must be non-negative")
    window_start_ms = max(0.0, center_s - radius_s) * 1000.0
    window_end_ms = (center_s + radius_s) * 1000.0
    return [
        cue
        for cue in track.cues
        if cue.start_ms <= window_end_ms and cue.end_ms >= window_start_ms
    ]


def render_excerpt(cues: Iterable[SubtitleCue]) -> str:
    """Concatenate cue texts in order, one space apart, newlines collapsed."""
    return " ".join(_NEWLINES.sub(" ", cue.text) for cue in cues)


def check_track_fits_video(track: SubtitleTrack, video: VideoRecord) -> None:
    """Cue ends may overrun the video duration by at most the allowed slack."""
    limit_ms = (video.duration_s + CUE_OVERRUN_SLACK_S) * 1000.0
    for cue in track.cues:
        if cue.end_ms > limit_ms:
            raise CueBeyondVideoEnd(
                f"cue ending at {cue.end_ms}ms exceeds video duration "
                f"{video.duration_s}s plus {CUE_OVERRUN_SLACK_S}s slack"
            )


@dataclass
class CaptionServerClient:
    """Optional adapter that pulls raw subtitle documents from a caption server.

    GET {base_url}/captions/{external_source_id}?lang={language_tag} must
    return the raw document body. File ingestion stays the supported path;
    this exists so deployments can mirror the hosting platform's captions.
    """

    base_url: str
    timeout_s: float = 10.0

    def fetch_remote_track(self, external_source_id: str, language_tag: str) -> str:
        url = f"{self.base_url.rstrip('/')}/captions/{external_source_id}"
        try:
            resp = httpx.get(url, params={"lang": language_tag}, timeout=self.timeout_s)
        except httpx.HTTPError as exc:
            raise RemoteUnavailable(f"caption server unreachable: {exc}")
        if resp.status_code == 404:
            raise NoTrackForLanguage(
                f"no {language_tag!r} track for {external_source_id!r}"
            )
        if resp.status_code != 200:
            raise RemoteUnavailable(f"caption server returned {resp.status_code}")
        return resp.text
