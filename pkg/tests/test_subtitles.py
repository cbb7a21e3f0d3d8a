"""Parser/serializer behavior, the fixture corpus, round-trip and window
properties, and the caption-server adapter."""

from __future__ import annotations

import random

import pytest

from helpers import (
    CRLF_VTT,
    HOURLESS_VTT,
    MARKUP_VTT,
    OVERLAPPING_SRT,
    random_track,
    stub_http_server,
)
from preplearn.models import ValidationError, VideoRecord
from preplearn.subtitles import (
    CaptionServerClient,
    CueBeyondVideoEnd,
    EmptyDocument,
    MalformedTimestamp,
    MissingHeader,
    NoTrackForLanguage,
    RemoteUnavailable,
    SubtitleCue,
    SubtitleTrack,
    check_track_fits_video,
    extract_window,
    parse_srt,
    parse_track,
    parse_webvtt,
    render_excerpt,
    serialize_srt,
    serialize_webvtt,
)


def make_video(duration_s: float) -> VideoRecord:
    return VideoRecord("v1", "t", "ext", duration_s, frozenset({"g1"}))


# -- parsing ------------------------------------------------------------------


def test_parse_webvtt_basic_timing():
    doc = "WEBVTT\n\n00:00:01.500 --> 00:00:04.250\nhello there\n"
    track = parse_webvtt(doc)
    assert len(track.cues) == 1
    cue = track.cues[0]
    assert (cue.start_ms, cue.end_ms, cue.text) == (1500, 4250, "hello there")
    assert track.source_format == "webvtt"


def test_parse_webvtt_crlf_and_bom():
    track = parse_webvtt(CRLF_VTT)
    assert [c.text for c in track.cues] == [
        "carriage returns everywhere",
        "still parse fine",
    ]
    assert track.cues[1].end_ms == 9500


def test_parse_webvtt_hourless_timestamps():
    track = parse_webvtt(HOURLESS_VTT)
    assert track.cues[0].start_ms == 10_500
    assert track.cues[0].end_ms == 60_250
    assert track.cues[1].start_ms == 59 * 60_000 + 59_000 + 999
    assert track.cues[1].end_ms == 3_600_000 + 1000


def test_parse_webvtt_markup_ids_and_comment_blocks():
    track = parse_webvtt(MARKUP_VTT)
    # NOTE/STYLE blocks skipped, id line skipped, markup stripped, lines
    # joined with a single space, empty-after-markup cue dropped
    assert [c.text for c in track.cues] == ["welcome back and a second line"]
    assert track.cues[0].start_ms == 1000  # settings after the end timestamp ignored


def test_parse_webvtt_sorts_cues():
    doc = (
        "WEBVTT\n\n"
        "00:00:30.000 --> 00:00:40.000\nlater\n\n"
        "00:00:10.000 --> 00:00:20.000\nearlier\n"
    )
    track = parse_webvtt(doc)
    assert [c.text for c in track.cues] == ["earlier", "later"]


def test_parse_webvtt_rejections():
    with pytest.raises(MissingHeader):
        parse_webvtt("NOTAVTT\n\n00:00:01.000 --> 00:00:02.000\nx\n")
    with pytest.raises(EmptyDocument):
        parse_webvtt("")
    with pytest.raises(EmptyDocument):
        parse_webvtt("   \n  \n")


def test_malformed_timestamp_reports_line():
    doc = "WEBVTT\n\nfiller id\n00:00:xx.000 --> 00:00:05.000\nbody\n"
    with pytest.raises(MalformedTimestamp) as err:
        parse_webvtt(doc)
    assert err.value.line_no == 4
    assert "line 4" in str(err.value)


def test_start_must_precede_end():
    doc = "WEBVTT\n\n00:00:05.000 --> 00:00:05.000\nx\n"
    with pytest.raises(MalformedTimestamp):
        parse_webvtt(doc)
    doc = "WEBVTT\n\n00:00:06.000 --> 00:00:05.000\nx\n"
    with pytest.raises(MalformedTimestamp):
        parse_webvtt(doc)


def test_minutes_and_seconds_ranges_enforced():
    with pytest.raises(MalformedTimestamp):
        parse_webvtt("WEBVTT\n\n00:61:00.000 --> 01:02:00.000\nx\n")
    with pytest.raises(MalformedTimestamp):
        parse_srt("1\n00:00:61,000 --> 00:01:02,000\nx\n")


def test_parse_srt_counters_and_overlaps():
    track = parse_srt(OVERLAPPING_SRT)
    assert [c.start_ms for c in track.cues] == [5000, 10_000, 14_500]
    assert track.cues[2].end_ms == 30_000
    assert track.source_format == "srt"


def test_parse_srt_counter_is_optional_and_digit_text_survives():
    doc = "00:00:01,000 --> 00:00:02,000\nno counter here\n\n7\n00:00:03,000 --> 00:00:04,000\n42\n"
    track = parse_srt(doc)
    assert [c.text for c in track.cues] == ["no counter here", "42"]


def test_parse_track_dispatch():
    vtt = "WEBVTT\n\n00:00:01.000 --> 00:00:02.000\nx\n"
    assert parse_track(vtt, "webvtt").cues == parse_track(vtt, "vtt").cues
    srt = "1\n00:00:01,000 --> 00:00:02,000\nx\n"
    assert parse_track(srt, "srt").cues[0].text == "x"
    with pytest.raises(ValidationError):
        parse_track(vtt, "ass")


def test_cue_invariants():
    with pytest.raises(ValidationError):
        SubtitleCue(start_ms=10, end_ms=10, text="x")
    with pytest.raises(ValidationError):
        SubtitleCue(start_ms=10, end_ms=20, text="")


# -- serialization -------------------------------------------------------------


def test_serialize_webvtt_exact():
    track = SubtitleTrack(
        "t", "v", "en",
        cues=(SubtitleCue(1500, 3_661_250, "one line"),),
        source_format="webvtt",
    )
    assert serialize_webvtt(track) == (
        "WEBVTT\n\n00:00:01.500 --> 01:01:01.250\none line\n"
    )


def test_serialize_srt_exact():
    track = SubtitleTrack(
        "t", "v", "en",
        cues=(
            SubtitleCue(1500, 2000, "first"),
            SubtitleCue(3000, 4000, "second"),
        ),
        source_format="srt",
    )
    assert serialize_srt(track) == (
        "1\n00:00:01,500 --> 00:00:02,000\nfirst\n\n"
        "2\n00:00:03,000 --> 00:00:04,000\nsecond\n"
    )


def test_round_trip_both_formats():
    rng = random.Random(1105)
    for _ in range(50):
        track = random_track(rng, min_cues=1)
        assert parse_webvtt(serialize_webvtt(track)).cues == track.cues
        assert parse_srt(serialize_srt(track)).cues == track.cues


def test_track_record_round_trip():
    rng = random.Random(7)
    track = random_track(rng, min_cues=3)
    assert SubtitleTrack.from_record(track.to_record()) == track


# -- window extraction -----------------------------------------------------------


def brute_force_window(track, center_s, radius_s):
    lo = max(0.0, center_s - radius_s)
    hi = center_s + radius_s
    return [
        cue
        for cue in track.cues
        if cue.start_ms / 1000.0 <= hi and cue.end_ms / 1000.0 >= lo
    ]


def test_window_overlap_not_containment():
    track = SubtitleTrack(
        "t", "v", "en",
        cues=(
            SubtitleCue(20_000, 30_000, "touches window start"),
            SubtitleCue(50_000, 70_000, "spans inside"),
            SubtitleCue(90_000, 100_000, "touches window end"),
            SubtitleCue(15_000, 19_999, "just before"),
            SubtitleCue(90_001, 95_000, "just after"),
        ),
        source_format="webvtt",
    )
    got = [c.text for c in extract_window(track, 60.0, 30.0)]
    assert got == [
        "touches window start",
        "spans inside",
        "touches window end",
    ]


def test_window_clamps_at_zero_without_recentering():
    track = SubtitleTrack(
        "t", "v", "en",
        cues=(SubtitleCue(0, 1000, "head"), SubtitleCue(41_000, 50_000, "outside")),
        source_format="webvtt",
    )
    assert [c.text for c in extract_window(track, 10.0, 30.0)] == ["head"]


def test_window_rejects_bad_arguments():
    track = random_track(random.Random(2), min_cues=1)
    with pytest.raises(ValueError):
        extract_window(track, 10.0, 0.0)
    with pytest.raises(ValueError):
        extract_window(track, -1.0, 30.0)


def test_window_matches_brute_force_oracle():
    rng = random.Random(20260818)
    for _ in range(100):
        track = random_track(rng, max_cues=60, snap_ms=500)
        for _ in range(5):
            center = rng.randint(0, 14_800) * 0.5
            radius = rng.randint(1, 240) * 0.5
            assert extract_window(track, center, radius) == brute_force_window(
                track, center, radius
            )


def test_render_excerpt_joins_in_order():
    cues = (SubtitleCue(0, 1000, "one"), SubtitleCue(1000, 2000, "two\nthree"))
    assert render_excerpt(cues) == "one two three"
    assert render_excerpt(()) == ""


# -- fit checks and the caption-server adapter -------------------------------------


def test_check_track_fits_video_slack():
    video = make_video(100.0)
    within = SubtitleTrack(
        "t", "v", "en", cues=(SubtitleCue(0, 105_000, "x"),), source_format="webvtt"
    )
    check_track_fits_video(within, video)  # exactly at duration + slack
    beyond = SubtitleTrack(
        "t", "v", "en", cues=(SubtitleCue(0, 105_001, "x"),), source_format="webvtt"
    )
    with pytest.raises(CueBeyondVideoEnd):
        check_track_fits_video(beyond, video)


def test_caption_server_client_paths():
    doc = "WEBVTT\n\n00:00:01.000 --> 00:00:02.000\nremote cue\n"
    seen = {}

    def responder(method, path, body, headers):
        seen["path"] = path
        if "lang=en" in path and "/captions/ext-1" in path:
            return 200, doc
        if "lang=xx" in path:
            return 404, "no track"
        return 500, "boom"

    with stub_http_server(responder) as base_url:
        client = CaptionServerClient(base_url=base_url)
        assert client.fetch_remote_track("ext-1", "en") == doc
        assert seen["path"].startswith("/captions/ext-1")
        with pytest.raises(NoTrackForLanguage):
            client.fetch_remote_track("ext-1", "xx")
        with pytest.raises(RemoteUnavailable):
            client.fetch_remote_track("other", "fr")

    # server is gone now: connection errors surface as RemoteUnavailable
    with pytest.raises(RemoteUnavailable):
        CaptionServerClient(base_url=base_url, timeout_s=0.5).fetch_remote_track("a", "en")
