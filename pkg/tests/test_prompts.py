"""Token heuristic, template rendering, budget trimming, and prompt assembly."""

from __future__ import annotations

import pytest

from preplearn.models import ResponseKind, ValidationError, VideoRecord, validate_response
from preplearn.prompts import (
    BudgetTooSmall,
    PromptEnvelope,
    PromptMessage,
    PromptTemplate,
    build_prompt,
    enforce_token_budget,
    envelope_token_estimate,
    estimate_tokens,
)
from preplearn.subtitles import SubtitleCue, SubtitleTrack

VIDEO = VideoRecord("v1", "Power Factor", "ext", 600.0, frozenset({"g1"}))


def make_question(timeline_s: float, text: str, include_subtitles: bool = True):
    return validate_response(
        {
            "kind": "Question",
            "timeline_s": timeline_s,
            "question_text": text,
            "include_subtitles": include_subtitles,
            "response_id": "r1",
            "user_id": "u1",
        },
        VIDEO,
    )


def make_track(*cues: SubtitleCue) -> SubtitleTrack:
    return SubtitleTrack("t1", "v1", "en", cues=tuple(cues), source_format="webvtt")


# -- token estimation -----------------------------------------------------------


def test_estimate_tokens_ascii_and_cjk():
    assert estimate_tokens("") == 0
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("abcde") == 2
    assert estimate_tokens("力率とは") == 2  # 4 codepoints / 2
    assert estimate_tokens("why 力率") == 3  # CJK divisor applies to the whole text


def test_envelope_estimate_sums_messages():
    env = PromptEnvelope(
        messages=(PromptMessage("system", "abcd"), PromptMessage("user", "abcdefgh")),
        model_id="m",
        created_for_response_id="r",
    )
    assert envelope_token_estimate(env) == 1 + 2


# -- templates ----------------------------------------------------------------


def test_template_placeholder_validation():
    with pytest.raises(ValidationError):
        PromptTemplate(system_preamble="no placeholders {subtitle_excerpt}")
    with pytest.raises(ValidationError):
        PromptTemplate(no_subtitle_variant="missing title placeholder")
    with pytest.raises(ValidationError):
        PromptTemplate(
            system_preamble="{video_title} {subtitle_excerpt} {subtitle_excerpt}"
        )
    defaults = PromptTemplate()
    assert "{video_title}" in defaults.system_preamble
    assert "{subtitle_excerpt}" in defaults.system_preamble
    assert "{subtitle_excerpt}" not in defaults.no_subtitle_variant


def test_default_template_mentions_language_and_context():
    # the assistant is steered to the video's context and student's language
    text = PromptTemplate().system_preamble.lower()
    assert "video" in text and "language" in text and "question" in text


# -- build_prompt ----------------------------------------------------------------


def test_build_prompt_requires_question():
    other = validate_response({"kind": "Interesting", "timeline_s": 1}, VIDEO)
    with pytest.raises(ValueError):
        build_prompt(VIDEO, other, None, PromptTemplate())


def test_build_prompt_with_subtitles():
    track = make_track(
        SubtitleCue(50_000, 70_000, "the excerpt body"),
        SubtitleCue(200_000, 210_000, "far away"),
    )
    question = make_question(60.0, "why does the current lead?")
    env = build_prompt(VIDEO, question, track, PromptTemplate(), model_id="m-1")
    assert env.user_content == "why does the current lead?"
    assert "the excerpt body" in env.system_content
    assert "far away" not in env.system_content
    assert "Power Factor" in env.system_content
    assert env.model_id == "m-1"
    assert env.created_for_response_id == "r1"
    assert len(env.messages) == 2
    assert [m.role for m in env.messages] == ["system", "user"]


def test_build_prompt_variants_without_subtitles():
    track = make_track(SubtitleCue(50_000, 70_000, "the excerpt body"))
    template = PromptTemplate()
    toggle_off = build_prompt(VIDEO, make_question(60.0, "why?", False), track, template)
    no_track = build_prompt(VIDEO, make_question(60.0, "why?", True), None, template)
    empty_window = build_prompt(VIDEO, make_question(500.0, "why?", True), track, template)
    expected = template.no_subtitle_variant.replace("{video_title}", VIDEO.title)
    for env in (toggle_off, no_track, empty_window):
        assert env.system_content == expected
        assert "the excerpt body" not in env.system_content


def test_build_prompt_is_deterministic():
    track = make_track(SubtitleCue(50_000, 70_000, "stable text"))
    question = make_question(60.0, "why?")
    assert build_prompt(VIDEO, question, track, PromptTemplate()) == build_prompt(
        VIDEO, question, track, PromptTemplate()
    )


def test_braces_in_title_and_question_survive():
    video = VideoRecord("v2", "Weird {title} with braces", "ext", 600.0, frozenset())
    question = validate_response(
        {
            "kind": "Question",
            "timeline_s": 1,
            "question_text": "what does {x} mean?",
            "response_id": "r2",
        },
        video,
    )
    env = build_prompt(video, question, None, PromptTemplate())
    assert "Weird {title} with braces" in env.system_content
    assert env.user_content == "what does {x} mean?"


# -- budget enforcement --------------------------------------------------------


def tokens_of(template: PromptTemplate, title: str, cues, question: str) -> int:
    from preplearn.prompts import _render_system

    env = PromptEnvelope(
        messages=(
            PromptMessage("system", _render_system(template, title, list(cues))),
            PromptMessage("user", question),
        ),
        model_id="",
        created_for_response_id="",
    )
    return envelope_token_estimate(env)


def test_budget_under_limit_is_untouched():
    track = make_track(SubtitleCue(50_000, 70_000, "short"))
    question = make_question(60.0, "why?")
    env = build_prompt(VIDEO, question, track, PromptTemplate(), budget_tokens=10_000)
    assert "short" in env.system_content


def test_budget_drops_edges_alternately_and_keeps_center():
    # nine cues; the one overlapping the question timeline sits in the middle
    cues = [
        SubtitleCue(10_000 * i, 10_000 * i + 9000, f"cue{i:02d} " + "filler " * 20)
        for i in range(9)
    ]
    track = make_track(*cues)
    question = make_question(45.0, "why?")  # overlaps cue 4
    template = PromptTemplate()

    # budget that exactly fits the middle five cues [2..6] but not [2..7]
    budget = tokens_of(template, VIDEO.title, cues[2:7], "why?")
    assert tokens_of(template, VIDEO.title, cues[2:8], "why?") > budget

    env = build_prompt(VIDEO, question, track, template, budget_tokens=budget)
    kept = [f"cue{i:02d}" for i in range(9) if f"cue{i:02d}" in env.system_content]
    assert kept == ["cue02", "cue03", "cue04", "cue05", "cue06"]
    assert envelope_token_estimate(env) <= budget
    assert env.user_content == "why?"


def test_budget_protects_center_cue_at_the_edge():
    cues = [
        SubtitleCue(10_000 * i, 10_000 * i + 9000, f"cue{i:02d} " + "filler " * 20)
        for i in range(5)
    ]
    track = make_track(*cues)
    question = make_question(12.0, "why?")  # overlaps cue 1
    template = PromptTemplate()
    budget = tokens_of(template, VIDEO.title, cues[1:2], "why?")

    env = build_prompt(VIDEO, question, track, template, budget_tokens=budget)
    kept = [f"cue{i:02d}" for i in range(5) if f"cue{i:02d}" in env.system_content]
    assert kept == ["cue01"]  # the center survives every other drop


def test_budget_falls_back_to_no_subtitle_variant():
    cues = [SubtitleCue(10_000, 19_000, "wide " * 400)]
    track = make_track(*cues)
    question = make_question(15.0, "why?")
    template = PromptTemplate()
    budget = tokens_of(template, VIDEO.title, [], "why?")

    env = build_prompt(VIDEO, question, track, template, budget_tokens=budget)
    assert env.system_content == template.no_subtitle_variant.replace(
        "{video_title}", VIDEO.title
    )


def test_budget_never_truncates_the_question():
    question = make_question(15.0, "a very long question " * 50, False)
    with pytest.raises(BudgetTooSmall):
        build_prompt(VIDEO, question, None, PromptTemplate(), budget_tokens=50)
    with pytest.raises(BudgetTooSmall):
        enforce_token_budget(
            PromptEnvelope(
                messages=(PromptMessage("system", "s"), PromptMessage("user", "u")),
                model_id="",
                created_for_response_id="",
            ),
            [],
            0,
            template=PromptTemplate(),
            video_title="t",
            center_s=0.0,
        )


def test_envelope_record_round_trip():
    env = PromptEnvelope(
        messages=(PromptMessage("system", "s"), PromptMessage("user", "u")),
        model_id="gpt-3.5-turbo",
        created_for_response_id="r1",
    )
    assert PromptEnvelope.from_record(env.to_record()) == env
