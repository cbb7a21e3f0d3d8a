"""Turns newly created question responses into assistant replies.

Jobs run on worker threads so submission never waits on the completion
provider. The provider is pluggable: `deterministic_mock` answers with a
stable digest and lets the whole system run end-to-end with no network;
`remote_http` speaks the chat-completion wire format. Provider failures are
retried with exponential backoff and end in a visible failed state; they
never corrupt the originating response.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import httpx

from .models import DomainError, Reply, ResponseKind, Role, User, utc_now_iso
from .prompts import (
    DEFAULT_BUDGET_TOKENS,
    PromptEnvelope,
    PromptTemplate,
    build_prompt,
)
from .store import Store
from .subtitles import DEFAULT_WINDOW_RADIUS_S

DEFAULT_MODEL_ID = "gpt-3.5-turbo"


class JobStatus(str, Enum):
    PENDING = "pending"
    IN_FLIGHT = "in_flight"
    DONE = "done"
    FAILED = "failed"


class NotAQuestion(DomainError):
    code = "not_a_question"


class DuplicateActiveJob(DomainError):
    code = "duplicate_active_job"


class LlmDisabled(DomainError):
    code = "llm_disabled"


class NoFailedJob(DomainError):
    code = "no_failed_job"


class Forbidden(DomainError):
    code = "forbidden"


class ProviderError(DomainError):
    code = "provider_error"


class ProviderTimeout(ProviderError):
    code = "timeout"


class RemoteError(ProviderError):
    code = "remote_error"

    def __init__(self, status: int, body_excerpt: str = ""):
        super().__init__(f"provider returned {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class MalformedProviderResponse(ProviderError):
    code = "malformed_provider_response"


@dataclass(frozen=True)
class AnswerJob:
    job_id: str
    response_id: str
    status: JobStatus
    attempts: int
    last_error: Optional[str]
    enqueued_at: str
    finished_at: Optional[str]

    @classmethod
    def from_record(cls, rec: dict) -> "AnswerJob":
        return cls(
            job_id=rec["job_id"],
            response_id=rec["response_id"],
            status=JobStatus(rec["status"]),
            attempts=int(rec["attempts"]),
            last_error=rec.get("last_error"),
            enqueued_at=rec["enqueued_at"],
            finished_at=rec.get("finished_at"),
        )

    def to_record(self) -> dict:
        return {
            "job_id": self.job_id,
            "response_id": self.response_id,
            "status": self.status.value,
            "attempts": self.attempts,
            "last_error": self.last_error,
            "enqueued_at": self.enqueued_at,
            "finished_at": self.finished_at,
        }


@dataclass(frozen=True)
class CompletionProviderConfig:
    provider_kind: str = "deterministic_mock"  # "remote_http" | "deterministic_mock"
    endpoint_url: Optional[str] = None
    api_key_ref: Optional[str] = None  # environment variable NAME, never the key
    model_id: str = DEFAULT_MODEL_ID
    timeout_s: float = 30.0
    max_attempts: int = 3
    backoff_base_ms: float = 500.0

    def __post_init__(self):
        if self.provider_kind not in ("remote_http", "deterministic_mock"):
            raise DomainError(f"unknown provider kind: {self.provider_kind!r}")
        if self.provider_kind == "remote_http" and not (
            self.endpoint_url and self.api_key_ref
        ):
            raise DomainError("remote_http providers require endpoint_url and api_key_ref")
        if self.max_attempts < 1:
            raise DomainError("max_attempts must be at least 1")


def mock_answer(envelope: PromptEnvelope) -> str:
    digest = hashlib.sha256(
        "".join(m.content for m in envelope.messages).encode("utf-8")
    ).hexdigest()[:16]
    return f"MOCK-ANSWER:{digest}"


def complete(envelope: PromptEnvelope, config: CompletionProviderConfig) -> str:
    """Run one completion call and return the answer text."""
    if config.provider_kind == "deterministic_mock":
        return mock_answer(envelope)

    api_key = os.environ.get(config.api_key_ref or "", "")
    if not api_key:
        raise RemoteError(0, f"credential env var {config.api_key_ref!r} is not set")
    payload = {
        "model": envelope.model_id or config.model_id,
        "messages": [{"role": m.role, "content": m.content} for m in envelope.messages],
    }
    try:
        resp = httpx.post(
            config.endpoint_url,
            json=payload,
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=config.timeout_s,
        )
    except httpx.TimeoutException as exc:
        raise ProviderTimeout(f"provider call timed out after {config.timeout_s}s: {exc}")
    except httpx.HTTPError as exc:
        raise RemoteError(0, str(exc))
    if resp.status_code != 200:
        raise RemoteError(resp.status_code, resp.text[:200])
    try:
        content = resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        raise MalformedProviderResponse(f"unexpected provider payload: {resp.text[:200]}")
    if not isinstance(content, str):
        raise MalformedProviderResponse("provider message content is not text")
    return content


CompletionFn = Callable[[PromptEnvelope, CompletionProviderConfig], str]


class AnswerService:
    """Schedules and executes answer jobs against the store.

    The store's compare-and-set on job status is the synchronization point;
    multiple workers may run concurrently across distinct responses.
    """

    def __init__(
        self,
        store: Store,
        provider_config: CompletionProviderConfig,
        template: Optional[PromptTemplate] = None,
        llm_enabled: bool = True,
        budget_tokens: int = DEFAULT_BUDGET_TOKENS,
        window_radius_s: float = DEFAULT_WINDOW_RADIUS_S,
        max_workers: int = 4,
        completion_fn: CompletionFn = complete,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        self.store = store
        self.config = provider_config
        self.template = template or PromptTemplate()
        self.llm_enabled = llm_enabled
        self.budget_tokens = budget_tokens
        self.window_radius_s = window_radius_s
        self._completion_fn = completion_fn
        self._sleep = sleep_fn
        self._executor = ThreadPoolExecutor(max_workers=max_workers)

    def close(self) -> None:
        self._executor.shutdown(wait=True, cancel_futures=True)

    # -- scheduling ---------------------------------------------------------

    def enqueue_answer_job(self, response_id: str) -> AnswerJob:
        """Persist and schedule a pending job; returns without waiting."""
        if not self.llm_enabled:
            raise LlmDisabled("answer jobs are disabled in base-compatibility mode")
        response = self.store.get_response(response_id)
        if response.kind is not ResponseKind.QUESTION:
            raise NotAQuestion(f"response {response_id} is {response.kind.value}")
        record = self.store.create_job_if_no_active(response_id)
        if record is None:
            raise DuplicateActiveJob(f"response {response_id} already has an active job")
        job = AnswerJob.from_record(record)
        self._executor.submit(self._run_scheduled, job.job_id)
        return job

    def retry_job(self, response_id: str, actor: User) -> AnswerJob:
        """Teacher-only: re-enqueue after a failed job; the old job is kept."""
        if actor.role is not Role.TEACHER:
            raise Forbidden("only teachers may retry answer jobs")
        self.store.get_response(response_id)  # NotFound propagates
        if not self.llm_enabled:
            raise LlmDisabled("answer jobs are disabled in base-compatibility mode")
        latest = self.store.latest_job_for_response(response_id)
        if latest is None or latest["status"] != JobStatus.FAILED.value:
            raise NoFailedJob(f"response {response_id} has no failed job to retry")
        record = self.store.create_job_if_no_active(response_id)
        if record is None:
            raise DuplicateActiveJob(f"response {response_id} already has an active job")
        job = AnswerJob.from_record(record)
        self._executor.submit(self._run_scheduled, job.job_id)
        return job

    def _run_scheduled(self, job_id: str) -> None:
        try:
            self.execute_job(AnswerJob.from_record(self.store.get_job(job_id)))
        except Exception:
            # Terminal failures live in job state; nothing escapes the worker.
            pass

    # -- execution ----------------------------------------------------------

    def build_envelope(self, response_id: str) -> PromptEnvelope:
        response = self.store.get_response(response_id)
        video = self.store.get_video(response.video_id)
        track = self.store.track_for_video(video.video_id)
        return build_prompt(
            video,
            response,
            track,
            self.template,
            budget_tokens=self.budget_tokens,
            radius_s=self.window_radius_s,
            model_id=self.config.model_id,
        )

    def execute_job(self, job: AnswerJob) -> Union[Reply, "AnswerJob"]:
        """Run a pending job to a terminal state; returns the Reply or the failed job."""
        claimed = self.store.transition_job(
            job.job_id, JobStatus.PENDING.value, {"status": JobStatus.IN_FLIGHT.value}
        )
        if claimed is None:
            return AnswerJob.from_record(self.store.get_job(job.job_id))

        attempts = 0
        last_error: Optional[str] = None
        while attempts < self.config.max_attempts:
            try:
                envelope = self.build_envelope(job.response_id)
                answer = self._completion_fn(envelope, self.config)
            except Exception as exc:
                attempts += 1
                last_error = f"{type(exc).__name__}: {exc}"
                self.store.transition_job(
                    job.job_id, JobStatus.IN_FLIGHT.value,
                    {"attempts": attempts, "last_error": last_error,
                     "status": JobStatus.IN_FLIGHT.value},
                )
                if attempts < self.config.max_attempts:
                    self._sleep(self.config.backoff_base_ms * (2 ** (attempts - 1)) / 1000.0)
                continue
            attempts += 1
            try:
                reply = self.store.add_reply(
                    job.response_id,
                    "assistant",
                    body=answer,
                    model_id=self.config.model_id,
                    prompt_envelope_record=envelope.to_record(),
                )
            except DomainError as exc:
                # An assistant reply already exists (defensive; at most one
                # active job should make this unreachable). done keeps the
                # exactly-one-reply invariant true; failed would not.
                self.store.transition_job(
                    job.job_id, JobStatus.IN_FLIGHT.value,
                    {"status": JobStatus.DONE.value, "attempts": attempts,
                     "last_error": f"reply already present: {exc}",
                     "finished_at": utc_now_iso()},
                )
                return AnswerJob.from_record(self.store.get_job(job.job_id))
            self.store.transition_job(
                job.job_id, JobStatus.IN_FLIGHT.value,
                {"status": JobStatus.DONE.value, "attempts": attempts,
                 "last_error": None, "finished_at": utc_now_iso()},
            )
            return reply

        self.store.transition_job(
            job.job_id, JobStatus.IN_FLIGHT.value,
            {"status": JobStatus.FAILED.value, "attempts": attempts,
             "last_error": last_error, "finished_at": utc_now_iso()},
        )
        return AnswerJob.from_record(self.store.get_job(job.job_id))

    # -- read side ------------------------------------------------------------

    def job_for_response(self, response_id: str) -> Optional[AnswerJob]:
        record = self.store.latest_job_for_response(response_id)
        return AnswerJob.from_record(record) if record else None
