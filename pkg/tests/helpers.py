"""Shared test utilities: random track generation, a scriptable HTTP stub
server, a poll helper, and the all-endpoints API workout."""

from __future__ import annotations

import random
import threading
import time
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from preplearn.subtitles import SubtitleCue, SubtitleTrack

TEACHER = {"Authorization": "Bearer tok-teach"}
ADA = {"Authorization": "Bearer tok-ada"}  # student, g1
BO = {"Authorization": "Bearer tok-bo"}  # student, g2
CY = {"Authorization": "Bearer tok-cy"}  # student, g1+g2

VTT_FIXTURE = (
    "WEBVTT\n"
    "\n"
    "00:00:10.000 --> 00:00:35.000\n"
    "the power factor is the ratio\n"
    "\n"
    "00:00:40.000 --> 00:01:00.000\n"
    "of real power to apparent power\n"
)

# Subtitle document corpus: CRLF endings, a BOM, hour-less VTT timestamps,
# overlapping cues, markup, identifiers, NOTE/STYLE blocks, cue settings.
CRLF_VTT = "﻿" + "\r\n".join(
    [
        "WEBVTT",
        "",
        "00:00:01.000 --> 00:00:04.000",
        "carriage returns everywhere",
        "",
        "00:00:05.000 --> 00:00:09.500",
        "still parse fine",
        "",
    ]
)

HOURLESS_VTT = "\n".join(
    [
        "WEBVTT",
        "",
        "00:10.500 --> 01:00.250",
        "minutes and seconds only",
        "",
        "59:59.999 --> 01:00:01.000",
        "spills into the hour",
        "",
    ]
)

MARKUP_VTT = "\n".join(
    [
        "WEBVTT - lecture captions",
        "",
        "NOTE this block is ignored",
        "spanning two lines",
        "",
        "STYLE",
        "::cue { color: lime }",
        "",
        "intro-cue-1",
        "00:00:01.000 --> 00:00:03.000 align:start position:10%",
        "<v Teacher>welcome <b>back</b></v>",
        "and a second line",
        "",
        "00:00:02.000 --> 00:00:02.500",
        "<i></i>",
        "",
    ]
)

OVERLAPPING_SRT = "\n".join(
    [
        "1",
        "00:00:05,000 --> 00:00:20,000",
        "first speaker keeps going",
        "",
        "2",
        "00:00:10,000 --> 00:00:15,000",
        "interjection on top",
        "",
        "3",
        "00:00:14,500 --> 00:00:30,000",
        "third overlapping line",
        "",
    ]
)

_WORDS = (
    "the power factor is ratio of real to apparent lecture video signal "
    "circuit load current voltage phase angle watts energy usable means"
).split()
_CJK_WORDS = ["力率", "電力", "皮相電力", "有効電力", "なぜ", "ですか", "講義"]


def random_cue_text(rng: random.Random) -> str:
    """Single-line, single-spaced, markup-free text: the parser's normal form."""
    words = []
    for _ in range(rng.randint(1, 8)):
        word = rng.choice(_CJK_WORDS) if rng.random() < 0.15 else rng.choice(_WORDS)
        if rng.random() < 0.2:
            word += rng.choice([",", ".", "?", "!"])
        words.append(word)
    return " ".join(words)


def random_track(
    rng: random.Random,
    min_cues: int = 0,
    max_cues: int = 40,
    max_start_ms: int = 7_200_000,
    max_len_ms: int = 120_000,
    snap_ms: int = 1,
) -> SubtitleTrack:
    cues = []
    for _ in range(rng.randint(min_cues, max_cues)):
        start = rng.randrange(0, max_start_ms, snap_ms)
        end = start + rng.randrange(snap_ms, max_len_ms, snap_ms)
        cues.append(SubtitleCue(start_ms=start, end_ms=end, text=random_cue_text(rng)))
    cues.sort(key=lambda c: (c.start_ms, c.end_ms))
    return SubtitleTrack(
        track_id="trk_fixture",
        video_id="vid_fixture",
        language_tag="en",
        cues=tuple(cues),
        source_format="webvtt",
    )


def wait_for(predicate, timeout_s: float = 5.0, step_s: float = 0.01):
    """Poll until predicate() is truthy; return its value or fail the test."""
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(step_s)
    raise AssertionError(f"condition not met within {timeout_s}s")


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def _serve(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, payload = self.server.responder(
            self.command, self.path, body, dict(self.headers)
        )
        data = payload.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    do_GET = _serve
    do_POST = _serve


@contextmanager
def stub_http_server(responder):
    """Serve `responder(method, path, body, headers) -> (status, text)` locally."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.responder = responder
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


def exercise_all_endpoints(client, llm_enabled: bool) -> dict:
    """Drive every endpoint through its documented happy path and errors.

    Runs identically in both service modes; the only mode-dependent
    observations are the job references that answer jobs introduce.
    Returns ids for follow-on assertions.
    """
    # authentication
    assert client.get("/videos").status_code == 401
    bad = {"Authorization": "Bearer nope"}
    assert client.get("/videos", headers=bad).status_code == 401

    # video registration
    r = client.post(
        "/videos",
        json={
            "title": "Power Factor",
            "external_source_id": "ext:pf-1",
            "duration_s": 300.0,
            "group_ids": ["g1", "g2"],
        },
        headers=TEACHER,
    )
    assert r.status_code == 201
    video = r.json()
    vid = video["video_id"]
    assert video["title"] == "Power Factor" and video["duration_s"] == 300.0
    assert client.post("/videos", json={"title": "x", "duration_s": 1}, headers=ADA).status_code == 403
    assert client.post("/videos", json={"title": "x", "duration_s": -5}, headers=TEACHER).status_code == 422

    # a second video assigned only to g1, to exercise membership rejections
    r = client.post(
        "/videos",
        json={"title": "G1 only", "duration_s": 100.0, "group_ids": ["g1"]},
        headers=TEACHER,
    )
    g1_vid = r.json()["video_id"]

    # subtitle ingestion
    r = client.put(
        f"/videos/{vid}/subtitles",
        json={"document": VTT_FIXTURE, "format": "webvtt", "language": "en"},
        headers=TEACHER,
    )
    assert r.status_code == 200 and r.json()["cue_count"] == 2
    first_track = r.json()["track_id"]
    r = client.put(
        f"/videos/{vid}/subtitles",
        json={"document": VTT_FIXTURE, "format": "webvtt", "language": "en"},
        headers=TEACHER,
    )
    assert r.json()["track_id"] != first_track  # replacement mints a new track
    assert client.get(f"/videos/{vid}", headers=TEACHER).json()["subtitle_track_id"] == r.json()["track_id"]
    r = client.put(
        f"/videos/{vid}/subtitles",
        json={"document": "WEBVTT\n\n00:00:aa.000 --> 00:00:05.000\nx\n", "format": "webvtt"},
        headers=TEACHER,
    )
    assert r.status_code == 422
    assert r.json()["detail"]["line"] == 3
    assert "line 3" in r.json()["detail"]["message"]
    assert client.put(f"/videos/{vid}/subtitles", json={"document": VTT_FIXTURE}, headers=ADA).status_code == 403
    assert client.put("/videos/none/subtitles", json={"document": VTT_FIXTURE}, headers=TEACHER).status_code == 404

    # response submission
    r = client.post(
        f"/videos/{vid}/responses",
        json={"kind": "Interesting", "timeline_s": 42.0},
        headers=ADA,
    )
    assert r.status_code == 201 and r.json()["job_id"] is None
    r = client.post(
        f"/videos/{vid}/responses",
        json={
            "kind": "Question",
            "timeline_s": 20.0,
            "question_text": "why is that?",
            "include_subtitles": True,
        },
        headers=ADA,
    )
    assert r.status_code == 201
    question_id = r.json()["response_id"]
    if llm_enabled:
        assert r.json()["job_id"]
    else:
        assert r.json()["job_id"] is None

    for bad_body, code in [
        ({"kind": "Boring", "timeline_s": 1.0}, "unknown_kind"),
        ({"kind": "Interesting", "timeline_s": 400.0}, "timeline_out_of_range"),
        ({"kind": "Interesting", "timeline_s": -1.0}, "timeline_out_of_range"),
        ({"kind": "Question", "timeline_s": 1.0, "question_text": "  "}, "missing_question_text"),
        ({"kind": "Difficult", "timeline_s": 1.0, "question_text": "smuggled"}, "unexpected_text"),
        ({"kind": "Question", "timeline_s": 1.0, "question_text": "x" * 2001}, "question_too_long"),
    ]:
        r = client.post(f"/videos/{vid}/responses", json=bad_body, headers=ADA)
        assert r.status_code == 422, bad_body
        assert r.json()["detail"]["error"] == code
    assert (
        client.post(
            f"/videos/{g1_vid}/responses",
            json={"kind": "Interesting", "timeline_s": 1.0},
            headers=BO,
        ).status_code
        == 403
    )

    # listing with visibility
    r = client.get(f"/videos/{vid}/responses", headers=ADA)
    assert r.status_code == 200
    listing = r.json()
    assert {p["response_id"] for p in listing["responses"]} >= {question_id}
    assert all("replies" in p and "answer_pending" in p for p in listing["responses"])
    assert all("job" not in p for p in listing["responses"])  # students see no job detail
    assert client.get("/videos/none/responses", headers=ADA).status_code == 404

    # manual replies
    r = client.post(f"/responses/{question_id}/replies", json={"body": "see the worked example"}, headers=TEACHER)
    assert r.status_code == 201 and r.json()["author_kind"] == "teacher"
    r = client.post(f"/responses/{question_id}/replies", json={"body": "same question here"}, headers=CY)
    assert r.status_code == 201 and r.json()["author_kind"] == "student"
    assert client.post(f"/responses/{question_id}/replies", json={"body": "  "}, headers=TEACHER).status_code == 422
    assert client.post("/responses/none/replies", json={"body": "x"}, headers=TEACHER).status_code == 404
    assert client.post(f"/responses/{question_id}/replies", json={"body": "hi"}, headers=BO).status_code == 403

    # teacher dashboard
    r = client.get(f"/videos/{vid}/questions", headers=TEACHER)
    assert r.status_code == 200
    rows = r.json()["questions"]
    assert [q["response_id"] for q in rows] == [question_id]
    row = rows[0]
    assert row["user_id"] == "u_ada" and row["timeline_s"] == 20.0
    assert row["include_subtitles"] is True
    assert len(row["replies"]) >= 2
    assert "job" in row and "job_failed" in row
    assert client.get(f"/videos/{vid}/questions", headers=ADA).status_code == 403

    # watch events
    assert client.post(f"/videos/{vid}/events", json={"kind": "start_watching", "timeline_s": 0.0}, headers=ADA).status_code == 201
    assert client.post(f"/videos/{vid}/events", json={"kind": "stop_watching", "timeline_s": 300.0}, headers=ADA).status_code == 201
    r = client.post(f"/videos/{vid}/events", json={"kind": "stop_watching", "timeline_s": 301.0}, headers=ADA)
    assert r.status_code == 422 and r.json()["detail"]["error"] == "timeline_out_of_range"
    r = client.post(f"/videos/{vid}/events", json={"kind": "response_put", "timeline_s": 1.0}, headers=ADA)
    assert r.status_code == 422 and r.json()["detail"]["error"] == "unknown_kind"
    assert client.post(f"/videos/{g1_vid}/events", json={"kind": "start_watching", "timeline_s": 0.0}, headers=BO).status_code == 403

    # analytics
    r = client.get(f"/videos/{vid}/analytics", params={"bucket_s": 30}, headers=TEACHER)
    assert r.status_code == 200
    body = r.json()
    assert body["histogram"]["totals"]["Question"] == 1
    assert body["histogram"]["totals"]["Interesting"] == 1
    assert body["coverage"]["u_ada"]["fraction"] == 1.0
    assert client.get(f"/videos/{vid}/analytics", headers=ADA).status_code == 403
    assert client.get(f"/videos/{vid}/analytics", params={"bucket_s": 0}, headers=TEACHER).status_code == 422

    # annotations
    r = client.post(
        f"/videos/{vid}/annotations",
        json={"kind": "steering_mark", "timeline_start_s": 120.0, "body": "focus here"},
        headers=TEACHER,
    )
    assert r.status_code == 201
    mark_id = r.json()["annotation_id"]
    r = client.post(
        f"/videos/{vid}/annotations",
        json={"kind": "caption", "timeline_start_s": 10.0, "timeline_end_s": 20.0, "body": "definition on screen"},
        headers=TEACHER,
    )
    assert r.status_code == 201
    r = client.post(
        f"/videos/{vid}/annotations",
        json={"kind": "caption", "timeline_start_s": 10.0, "timeline_end_s": 5.0, "body": "backwards"},
        headers=TEACHER,
    )
    assert r.status_code == 422
    assert client.post(f"/videos/{vid}/annotations", json={"kind": "steering_mark", "timeline_start_s": 1.0, "body": "x"}, headers=ADA).status_code == 403
    annotations = client.get(f"/videos/{vid}/annotations", headers=ADA).json()["annotations"]
    assert len(annotations) == 2
    listing = client.get(f"/videos/{vid}/responses", headers=ADA).json()
    assert len(listing["annotations"]) == 2  # rendered alongside responses
    assert client.delete(f"/annotations/{mark_id}", headers=ADA).status_code == 403
    assert client.delete(f"/annotations/{mark_id}", headers=TEACHER).status_code == 200
    assert client.delete(f"/annotations/{mark_id}", headers=TEACHER).status_code == 404
    assert len(client.get(f"/videos/{vid}/annotations", headers=TEACHER).json()["annotations"]) == 1

    # retry mapping: no failed job either way; students always rejected
    assert client.post("/responses/none/retry", headers=TEACHER).status_code == 404
    assert client.post(f"/responses/{question_id}/retry", headers=ADA).status_code == 403
    assert client.post(f"/responses/{question_id}/retry", headers=TEACHER).status_code == 409

    return {"video_id": vid, "g1_video_id": g1_vid, "question_id": question_id}
