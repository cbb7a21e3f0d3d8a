"""HTTP surface: video registration, subtitle ingestion, response submission
(with background answer jobs), reply threads, the teacher question dashboard,
watch events, analytics, and annotations.

Handlers are stateless; all shared state lives in the store. Answer jobs run
on the gateway's worker pool, so submission never waits on the provider.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any, Optional

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .analytics import response_histogram, watch_coverage
from .config import ServiceConfig
from .gateway import (
    AnswerService,
    DuplicateActiveJob,
    LlmDisabled,
    NoFailedJob,
    NotAQuestion,
    Forbidden,
)
from .models import (
    DomainError,
    ResponseKind,
    Role,
    TimelineOutOfRange,
    UnknownKind,
    User,
    ValidationError,
    WatchEventKind,
    can_see_response,
    shares_group,
    validate_annotation,
)
from .store import IntegrityViolation, NotFound, Store
from .subtitles import SubtitleParseError, parse_track

_ACTIVE_JOB_STATUSES = ("pending", "in_flight")
_CONFLICT_ERRORS = (
    DuplicateActiveJob,
    NoFailedJob,
    LlmDisabled,
    NotAQuestion,
    IntegrityViolation,
)


# -- request bodies ---------------------------------------------------------


class VideoIn(BaseModel):
    title: str = ""
    external_source_id: str = ""
    duration_s: float = 0.0
    group_ids: list[str] = []


class SubtitleIn(BaseModel):
    document: str
    format: str = "webvtt"
    language: str = "en"


class ResponseIn(BaseModel):
    kind: str
    timeline_s: float
    question_text: Optional[str] = None
    include_subtitles: bool = False


class ReplyIn(BaseModel):
    body: str = ""


class EventIn(BaseModel):
    kind: str
    timeline_s: float


class AnnotationIn(BaseModel):
    kind: str
    timeline_start_s: float = 0.0
    timeline_end_s: Optional[float] = None
    body: str = ""


# -- error translation -------------------------------------------------------


def _status_for(exc: DomainError) -> int:
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, Forbidden):
        return 403
    if isinstance(exc, (ValidationError, SubtitleParseError)):
        return 422
    if isinstance(exc, _CONFLICT_ERRORS):
        return 409
    return 400


def _error_detail(exc: DomainError) -> dict[str, Any]:
    detail: dict[str, Any] = {"error": exc.code, "message": str(exc)}
    line_no = getattr(exc, "line_no", None)
    if line_no is not None:
        detail["line"] = line_no
    return detail


def _auth_error(message: str) -> HTTPException:
    return HTTPException(
        status_code=401,
        detail={"error": "unauthorized", "message": message},
        headers={"WWW-Authenticate": "Bearer"},
    )


def _forbidden(message: str) -> HTTPException:
    return HTTPException(status_code=403, detail={"error": "forbidden", "message": message})


# -- app factory --------------------------------------------------------------


def create_app(
    config: ServiceConfig,
    store: Optional[Store] = None,
    answer_service: Optional[AnswerService] = None,
) -> FastAPI:
    """Wire a service instance. Pass `store`/`answer_service` to share or stub
    them (tests do); anything the factory creates is closed on shutdown."""
    owns_store = store is None
    if store is None:
        store = Store(config.data_dir)
    for user in config.users:
        store.put_user(user)

    owns_answers = answer_service is None
    answers = answer_service or AnswerService(
        store,
        config.provider,
        template=config.template,
        llm_enabled=config.llm_enabled,
        budget_tokens=config.budget_tokens,
        window_radius_s=config.window_radius_s,
    )

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        if owns_answers:
            answers.close()
        if owns_store:
            store.close()

    app = FastAPI(title="preparation-learning service", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.answers = answers
    app.state.config = config

    @app.exception_handler(DomainError)
    async def domain_error_handler(_, exc: DomainError):
        return JSONResponse(
            status_code=_status_for(exc), content={"detail": _error_detail(exc)}
        )

    # -- auth -----------------------------------------------------------------

    def current_user(authorization: Optional[str] = Header(default=None)) -> User:
        if not authorization or not authorization.startswith("Bearer "):
            raise _auth_error("missing bearer token")
        user_id = config.tokens.get(authorization[len("Bearer "):])
        if user_id is None:
            raise _auth_error("unknown token")
        try:
            return store.get_user(user_id)
        except NotFound:
            raise _auth_error("token maps to an unknown user")

    def require_teacher(user: User = Depends(current_user)) -> User:
        if user.role is not Role.TEACHER:
            raise _forbidden("teacher credential required")
        return user

    def require_member(user: User, video) -> None:
        if not shares_group(user, video):
            raise _forbidden("not a member of this video's groups")

    # -- payload shaping -------------------------------------------------------

    def response_payload(response, viewer: User) -> dict[str, Any]:
        rec = response.to_record()
        rec["replies"] = [r.to_record() for r in store.list_replies(response.response_id)]
        job = store.latest_job_for_response(response.response_id)
        rec["answer_pending"] = bool(job and job["status"] in _ACTIVE_JOB_STATUSES)
        if viewer.role is Role.TEACHER:
            rec["job"] = dict(job) if job else None
        return rec

    # -- meta -----------------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "llm_enabled": config.llm_enabled}

    # -- videos ----------------------------------------------------------------

    @app.post("/videos", status_code=201)
    def register_video(body: VideoIn, user: User = Depends(require_teacher)):
        video = store.create_video(
            body.title, body.external_source_id, body.duration_s, body.group_ids
        )
        return video.to_record()

    @app.get("/videos")
    def list_videos(user: User = Depends(current_user)):
        videos = store.list_videos()
        if user.role is not Role.TEACHER:
            videos = [v for v in videos if shares_group(user, v)]
        return {"videos": [v.to_record() for v in videos]}

    @app.get("/videos/{video_id}")
    def get_video(video_id: str, user: User = Depends(current_user)):
        video = store.get_video(video_id)
        if user.role is not Role.TEACHER:
            require_member(user, video)
        return video.to_record()

    @app.put("/videos/{video_id}/subtitles")
    def ingest_subtitles(
        video_id: str, body: SubtitleIn, user: User = Depends(require_teacher)
    ):
        store.get_video(video_id)
        track = parse_track(body.document, body.format, language_tag=body.language)
        stored = store.link_subtitle_track(video_id, track)
        return {
            "track_id": stored.track_id,
            "video_id": video_id,
            "language_tag": stored.language_tag,
            "format": stored.source_format,
            "cue_count": len(stored.cues),
        }

    # -- responses and replies ---------------------------------------------------

    @app.post("/videos/{video_id}/responses", status_code=201)
    def submit_response(
        video_id: str, body: ResponseIn, user: User = Depends(current_user)
    ):
        video = store.get_video(video_id)
        require_member(user, video)
        response = store.create_response(
            {
                "user_id": user.user_id,
                "kind": body.kind,
                "timeline_s": body.timeline_s,
                "question_text": body.question_text,
                "include_subtitles": body.include_subtitles,
            },
            video,
            max_question_chars=config.max_question_chars,
        )
        store.append_event(
            user.user_id,
            video_id,
            WatchEventKind.RESPONSE_PUT.value,
            response.timeline_s,
            response_id=response.response_id,
        )
        job_id = None
        if response.kind is ResponseKind.QUESTION and config.llm_enabled:
            job_id = answers.enqueue_answer_job(response.response_id).job_id
        payload = response.to_record()
        payload["job_id"] = job_id
        return payload

    @app.get("/videos/{video_id}/responses")
    def list_responses(video_id: str, user: User = Depends(current_user)):
        store.get_video(video_id)
        responses = store.list_responses(video_id=video_id)
        if user.role is not Role.TEACHER:
            authors = {u.user_id: u for u in store.list_users()}
            responses = [
                r
                for r in responses
                if r.user_id in authors and can_see_response(user, authors[r.user_id])
            ]
        return {
            "responses": [response_payload(r, user) for r in responses],
            "annotations": [a.to_record() for a in store.list_annotations(video_id)],
        }

    @app.post("/responses/{response_id}/replies", status_code=201)
    def manual_reply(
        response_id: str, body: ReplyIn, user: User = Depends(current_user)
    ):
        response = store.get_response(response_id)
        author = store.get_user(response.user_id)
        if not can_see_response(user, author):
            raise _forbidden("response is not visible to you")
        reply = store.add_reply(
            response_id,
            author_kind=user.role.value,
            body=body.body.strip(),
            author_id=user.user_id,
        )
        return reply.to_record()

    @app.get("/videos/{video_id}/questions")
    def teacher_dashboard(video_id: str, user: User = Depends(require_teacher)):
        store.get_video(video_id)
        rows = []
        for q in store.list_responses(video_id=video_id, kind=ResponseKind.QUESTION.value):
            row = response_payload(q, user)
            row["job_failed"] = bool(row["job"] and row["job"]["status"] == "failed")
            rows.append(row)
        return {"questions": rows}

    # -- watch events and analytics ----------------------------------------------

    @app.post("/videos/{video_id}/events", status_code=201)
    def record_event(video_id: str, body: EventIn, user: User = Depends(current_user)):
        video = store.get_video(video_id)
        require_member(user, video)
        if body.kind not in (
            WatchEventKind.START_WATCHING.value,
            WatchEventKind.STOP_WATCHING.value,
        ):
            raise UnknownKind(f"unknown event kind: {body.kind!r}")
        if not (0.0 <= body.timeline_s <= video.duration_s):
            raise TimelineOutOfRange(
                f"timeline {body.timeline_s} outside [0, {video.duration_s}]"
            )
        event = store.append_event(user.user_id, video_id, body.kind, body.timeline_s)
        return {"event_id": event.event_id, "created_at": event.created_at}

    @app.get("/videos/{video_id}/analytics")
    def video_analytics(
        video_id: str, bucket_s: float = 30.0, user: User = Depends(require_teacher)
    ):
        if bucket_s <= 0:
            raise ValidationError("bucket_s must be positive")
        histogram = response_histogram(store, video_id, bucket_s)
        watchers = sorted({e.user_id for e in store.list_events(video_id=video_id)})
        return {
            "video_id": video_id,
            "histogram": histogram.to_record(),
            "coverage": {
                uid: watch_coverage(store, video_id, uid).to_record() for uid in watchers
            },
        }

    # -- annotations ---------------------------------------------------------------

    @app.post("/videos/{video_id}/annotations", status_code=201)
    def add_annotation(
        video_id: str, body: AnnotationIn, user: User = Depends(require_teacher)
    ):
        video = store.get_video(video_id)
        annotation = validate_annotation(
            {
                "kind": body.kind,
                "timeline_start_s": body.timeline_start_s,
                "timeline_end_s": body.timeline_end_s,
                "body": body.body,
            },
            video,
        )
        return store.add_annotation(annotation).to_record()

    @app.get("/videos/{video_id}/annotations")
    def list_annotations(video_id: str, user: User = Depends(current_user)):
        store.get_video(video_id)
        return {"annotations": [a.to_record() for a in store.list_annotations(video_id)]}

    @app.delete("/annotations/{annotation_id}")
    def delete_annotation(annotation_id: str, user: User = Depends(require_teacher)):
        store.delete_annotation(annotation_id)
        return {"deleted": annotation_id}

    # -- answer jobs -----------------------------------------------------------------

    @app.post("/responses/{response_id}/retry", status_code=201)
    def retry_answer(response_id: str, user: User = Depends(current_user)):
        return answers.retry_job(response_id, user).to_record()

    @app.get("/replies/{reply_id}/prompt")
    def reply_prompt(reply_id: str, user: User = Depends(require_teacher)):
        return {"reply_id": reply_id, "envelope": store.get_prompt_snapshot(reply_id)}

    if config.static_dir and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app
