"""Durable single-node storage: one append-only JSONL journal per collection.

The store owns id generation and wall-clock timestamps, enforces referential
integrity, and serializes writes behind one lock; job status transitions go
through compare-and-set here so concurrent workers stay consistent. Watch
events are append-only and never rewritten. Compaction rewrites journals to
current state and is offline (CLI).
"""

from __future__ import annotations

import fcntl
import json
import os
import threading
import uuid
from pathlib import Path
from typing import Any, IO, Iterable, Mapping, Optional

from .models import (
    DEFAULT_MAX_QUESTION_CHARS,
    DomainError,
    Reply,
    Response,
    TeacherAnnotation,
    User,
    VideoRecord,
    WatchEvent,
    WatchEventKind,
    utc_now_iso,
    validate_response,
)
from .subtitles import SubtitleTrack, check_track_fits_video

NON_TERMINAL_JOB_STATUSES = ("pending", "in_flight")


class NotFound(DomainError):
    code = "not_found"


class IntegrityViolation(DomainError):
    code = "integrity_violation"


class StoreLocked(DomainError):
    code = "store_locked"


class _Journal:
    """Append-only JSONL file; keyed puts/deletes plus ordered appends."""

    def __init__(self, path: Path):
        self.path = path
        self._fh: Optional[IO[str]] = None

    def open_for_append(self) -> None:
        self._fh = open(self.path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    def write(self, entry: dict) -> None:
        assert self._fh is not None
        self._fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        self._fh.flush()

    def replay(self) -> Iterable[dict]:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def rewrite(self, entries: Iterable[dict]) -> None:
        self.close()
        tmp = self.path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for entry in entries:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        os.replace(tmp, self.path)
        self.open_for_append()


KEYED_COLLECTIONS = (
    "videos",
    "users",
    "responses",
    "replies",
    "annotations",
    "jobs",
    "tracks",
    "prompt_snapshots",
)

KEY_FIELDS = {
    "videos": "video_id",
    "users": "user_id",
    "responses": "response_id",
    "replies": "reply_id",
    "annotations": "annotation_id",
    "jobs": "job_id",
    "tracks": "track_id",
    "prompt_snapshots": "snapshot_id",
}


class Store:
    """All collections live in `root`; safe for concurrent threads."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        # Single-writer guard: the journals have exactly one live reader/writer.
        # A second opener (a CLI command against a running server, say) would
        # replay a snapshot and then append blind to the same files, so the two
        # processes would drift apart without noticing. Fail loudly instead.
        self._lockfile: Optional[IO[str]] = open(self.root / ".lock", "w")
        try:
            fcntl.flock(self._lockfile, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            self._lockfile.close()
            self._lockfile = None
            raise StoreLocked(
                f"data dir {self.root} is already open in another process; "
                "stop it first (the server and the mutating CLI commands "
                "cannot share a data dir)"
            ) from None
        self._lock = threading.RLock()
        self._journals: dict[str, _Journal] = {}
        self._data: dict[str, dict[str, dict]] = {name: {} for name in KEYED_COLLECTIONS}
        self._events: list[dict] = []

        for name in KEYED_COLLECTIONS:
            journal = _Journal(self.root / f"{name}.jsonl")
            for entry in journal.replay():
                if entry["op"] == "put":
                    self._data[name][entry["k"]] = entry["v"]
                elif entry["op"] == "del":
                    self._data[name].pop(entry["k"], None)
            journal.open_for_append()
            self._journals[name] = journal

        events_journal = _Journal(self.root / "events.jsonl")
        for entry in events_journal.replay():
            self._events.append(entry["v"])
        events_journal.open_for_append()
        self._journals["events"] = events_journal

    def close(self) -> None:
        with self._lock:
            for journal in self._journals.values():
                journal.close()
            if self._lockfile is not None:
                fcntl.flock(self._lockfile, fcntl.LOCK_UN)
                self._lockfile.close()
                self._lockfile = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def new_id(self, prefix: str) -> str:
        return f"{prefix}_{uuid.uuid4().hex[:12]}"

    def _put(self, collection: str, key: str, record: dict) -> None:
        self._data[collection][key] = record
        self._journals[collection].write({"op": "put", "k": key, "v": record})

    def _delete(self, collection: str, key: str) -> None:
        self._data[collection].pop(key, None)
        self._journals[collection].write({"op": "del", "k": key})

    # -- videos ---------------------------------------------------------

    def create_video(
        self,
        title: str,
        external_source_id: str,
        duration_s: float,
        group_ids: Iterable[str],
    ) -> VideoRecord:
        with self._lock:
            video = VideoRecord(
                video_id=self.new_id("vid"),
                title=title,
                external_source_id=external_source_id,
                duration_s=duration_s,
                group_ids=frozenset(group_ids),
            )
            self._put("videos", video.video_id, video.to_record())
            return video

    def get_video(self, video_id: str) -> VideoRecord:
        with self._lock:
            rec = self._data["videos"].get(video_id)
            if rec is None:
                raise NotFound(f"video {video_id} not found")
            return VideoRecord.from_record(rec)

    def list_videos(self) -> list[VideoRecord]:
        with self._lock:
            return [VideoRecord.from_record(r) for r in self._data["videos"].values()]

    # -- users ----------------------------------------------------------

    def put_user(self, user: User) -> None:
        with self._lock:
            self._put("users", user.user_id, user.to_record())

    def get_user(self, user_id: str) -> User:
        with self._lock:
            rec = self._data["users"].get(user_id)
            if rec is None:
                raise NotFound(f"user {user_id} not found")
            return User.from_record(rec)

    def list_users(self) -> list[User]:
        with self._lock:
            return [User.from_record(r) for r in self._data["users"].values()]

    # -- subtitle tracks --------------------------------------------------

    def link_subtitle_track(self, video_id: str, track: SubtitleTrack) -> SubtitleTrack:
        """Persist a parsed track under a fresh id and link it, replacing any prior."""
        with self._lock:
            video = self.get_video(video_id)
            stored = SubtitleTrack(
                track_id=self.new_id("trk"),
                video_id=video_id,
                language_tag=track.language_tag,
                cues=track.cues,
                source_format=track.source_format,
            )
            check_track_fits_video(stored, video)
            self._put("tracks", stored.track_id, stored.to_record())
            updated = VideoRecord(
                video_id=video.video_id,
                title=video.title,
                external_source_id=video.external_source_id,
                duration_s=video.duration_s,
                group_ids=video.group_ids,
                subtitle_track_id=stored.track_id,
            )
            self._put("videos", updated.video_id, updated.to_record())
            return stored

    def get_track(self, track_id: str) -> SubtitleTrack:
        with self._lock:
            rec = self._data["tracks"].get(track_id)
            if rec is None:
                raise NotFound(f"track {track_id} not found")
            return SubtitleTrack.from_record(rec)

    def track_for_video(self, video_id: str) -> Optional[SubtitleTrack]:
        with self._lock:
            video = self.get_video(video_id)
            if video.subtitle_track_id is None:
                return None
            return self.get_track(video.subtitle_track_id)

    # -- responses --------------------------------------------------------

    def create_response(
        self,
        candidate: Mapping[str, Any],
        video: VideoRecord,
        max_question_chars: int = DEFAULT_MAX_QUESTION_CHARS,
    ) -> Response:
        with self._lock:
            enriched = dict(candidate)
            enriched["response_id"] = self.new_id("res")
            enriched["created_at"] = utc_now_iso()
            response = validate_response(enriched, video, max_question_chars)
            self._put("responses", response.response_id, response.to_record())
            return response

    def get_response(self, response_id: str) -> Response:
        with self._lock:
            rec = self._data["responses"].get(response_id)
            if rec is None:
                raise NotFound(f"response {response_id} not found")
            return Response.from_record(rec)

    def list_responses(
        self,
        video_id: Optional[str] = None,
        kind: Optional[str] = None,
        user_ids: Optional[set[str]] = None,
    ) -> list[Response]:
        with self._lock:
            out = []
            for rec in self._data["responses"].values():
                if video_id is not None and rec["video_id"] != video_id:
                    continue
                if kind is not None and rec["kind"] != kind:
                    continue
                if user_ids is not None and rec["user_id"] not in user_ids:
                    continue
                out.append(Response.from_record(rec))
            # dict insertion order is creation order, even after a restart:
            # the journal replays creations in the order they were appended.
            return out

    # -- replies ----------------------------------------------------------

    def add_reply(
        self,
        response_id: str,
        author_kind: str,
        body: str,
        author_id: Optional[str] = None,
        model_id: Optional[str] = None,
        prompt_envelope_record: Optional[dict] = None,
    ) -> Reply:
        """Persist a reply; assistant replies store their prompt snapshot and
        are unique per response (the single-answer rule is enforced here,
        under the write lock)."""
        with self._lock:
            if response_id not in self._data["responses"]:
                raise IntegrityViolation(f"response {response_id} does not exist")
            reply_id = self.new_id("rpl")
            snapshot_ref = None
            if author_kind == "assistant":
                if prompt_envelope_record is None or model_id is None:
                    raise IntegrityViolation(
                        "assistant replies require a prompt snapshot and model_id"
                    )
                for rec in self._data["replies"].values():
                    if rec["response_id"] == response_id and rec["author_kind"] == "assistant":
                        raise IntegrityViolation(
                            f"response {response_id} already has an assistant reply"
                        )
                snapshot_ref = reply_id
                self._put(
                    "prompt_snapshots",
                    snapshot_ref,
                    {"snapshot_id": snapshot_ref, "envelope": prompt_envelope_record},
                )
            reply = Reply(
                reply_id=reply_id,
                response_id=response_id,
                author_kind=author_kind,
                author_id=author_id,
                body=body,
                prompt_snapshot=snapshot_ref,
                model_id=model_id if author_kind == "assistant" else None,
                created_at=utc_now_iso(),
            )
            self._put("replies", reply.reply_id, reply.to_record())
            return reply

    def list_replies(self, response_id: str) -> list[Reply]:
        with self._lock:
            return [
                Reply.from_record(rec)
                for rec in self._data["replies"].values()
                if rec["response_id"] == response_id
            ]

    def get_prompt_snapshot(self, snapshot_ref: str) -> dict:
        with self._lock:
            rec = self._data["prompt_snapshots"].get(snapshot_ref)
            if rec is None:
                raise NotFound(f"prompt snapshot {snapshot_ref} not found")
            return rec["envelope"]

    # -- annotations ------------------------------------------------------

    def add_annotation(self, annotation: TeacherAnnotation) -> TeacherAnnotation:
        with self._lock:
            if annotation.video_id not in self._data["videos"]:
                raise IntegrityViolation(f"video {annotation.video_id} does not exist")
            stored = TeacherAnnotation(
                annotation_id=self.new_id("ann"),
                video_id=annotation.video_id,
                kind=annotation.kind,
                timeline_start_s=annotation.timeline_start_s,
                timeline_end_s=annotation.timeline_end_s,
                body=annotation.body,
            )
            self._put("annotations", stored.annotation_id, stored.to_record())
            return stored

    def list_annotations(self, video_id: str) -> list[TeacherAnnotation]:
        with self._lock:
            out = [
                TeacherAnnotation.from_record(rec)
                for rec in self._data["annotations"].values()
                if rec["video_id"] == video_id
            ]
            out.sort(key=lambda a: (a.timeline_start_s, a.annotation_id))
            return out

    def delete_annotation(self, annotation_id: str) -> None:
        with self._lock:
            if annotation_id not in self._data["annotations"]:
                raise NotFound(f"annotation {annotation_id} not found")
            self._delete("annotations", annotation_id)

    # -- watch events (append-only) ---------------------------------------

    def append_event(
        self,
        user_id: str,
        video_id: str,
        kind: str,
        timeline_s: float,
        response_id: Optional[str] = None,
    ) -> WatchEvent:
        with self._lock:
            if video_id not in self._data["videos"]:
                raise IntegrityViolation(f"video {video_id} does not exist")
            if kind == WatchEventKind.RESPONSE_PUT.value:
                if response_id not in self._data["responses"]:
                    raise IntegrityViolation(
                        f"response_put references missing response {response_id}"
                    )
            event = WatchEvent(
                event_id=self.new_id("evt"),
                user_id=user_id,
                video_id=video_id,
                kind=kind,
                timeline_s=timeline_s,
                created_at=utc_now_iso(),
                response_id=response_id,
            )
            self._events.append(event.to_record())
            self._journals["events"].write({"op": "append", "v": event.to_record()})
            return event

    def list_events(
        self, video_id: Optional[str] = None, user_id: Optional[str] = None
    ) -> list[WatchEvent]:
        """Events in append order."""
        with self._lock:
            out = []
            for rec in self._events:
                if video_id is not None and rec["video_id"] != video_id:
                    continue
                if user_id is not None and rec["user_id"] != user_id:
                    continue
                out.append(WatchEvent.from_record(rec))
            return out

    # -- answer jobs --------------------------------------------------------

    def create_job_if_no_active(self, response_id: str) -> Optional[dict]:
        """Create a pending job unless a non-terminal one exists for the response.

        Returns the new job record, or None when an active job blocks it.
        """
        with self._lock:
            if response_id not in self._data["responses"]:
                raise IntegrityViolation(f"response {response_id} does not exist")
            for rec in self._data["jobs"].values():
                if (
                    rec["response_id"] == response_id
                    and rec["status"] in NON_TERMINAL_JOB_STATUSES
                ):
                    return None
            record = {
                "job_id": self.new_id("job"),
                "response_id": response_id,
                "status": "pending",
                "attempts": 0,
                "last_error": None,
                "enqueued_at": utc_now_iso(),
                "finished_at": None,
            }
            self._put("jobs", record["job_id"], record)
            return dict(record)

    def transition_job(
        self, job_id: str, expect_status: str, updates: Mapping[str, Any]
    ) -> Optional[dict]:
        """Compare-and-set on job status; returns the updated record or None."""
        with self._lock:
            rec = self._data["jobs"].get(job_id)
            if rec is None:
                raise NotFound(f"job {job_id} not found")
            if rec["status"] != expect_status:
                return None
            updated = dict(rec)
            updated.update(updates)
            self._put("jobs", job_id, updated)
            return dict(updated)

    def get_job(self, job_id: str) -> dict:
        with self._lock:
            rec = self._data["jobs"].get(job_id)
            if rec is None:
                raise NotFound(f"job {job_id} not found")
            return dict(rec)

    def latest_job_for_response(self, response_id: str) -> Optional[dict]:
        with self._lock:
            jobs = [
                rec
                for rec in self._data["jobs"].values()
                if rec["response_id"] == response_id
            ]
            if not jobs:
                return None
            # creation order, not enqueued_at: two jobs created within the
            # same millisecond would otherwise tie and order arbitrarily.
            return dict(jobs[-1])

    def list_jobs(self, response_id: Optional[str] = None) -> list[dict]:
        with self._lock:
            return [
                dict(rec)
                for rec in self._data["jobs"].values()
                if response_id is None or rec["response_id"] == response_id
            ]

    # -- export / compaction ----------------------------------------------

    def export_collection(self, collection: str, fp: IO[str]) -> int:
        """Write the collection's current state as JSON lines; returns row count."""
        with self._lock:
            if collection == "events":
                rows = list(self._events)
            elif collection in KEYED_COLLECTIONS:
                rows = list(self._data[collection].values())
            else:
                raise NotFound(f"unknown collection {collection!r}")
            for row in rows:
                fp.write(json.dumps(row, ensure_ascii=False) + "\n")
            return len(rows)

    def collection_names(self) -> list[str]:
        return list(KEYED_COLLECTIONS) + ["events"]

    def compact(self) -> None:
        """Rewrite journals to current state; event order is preserved."""
        with self._lock:
            for name in KEYED_COLLECTIONS:
                self._journals[name].rewrite(
                    {"op": "put", "k": key, "v": rec}
                    for key, rec in self._data[name].items()
                )
            self._journals["events"].rewrite(
                {"op": "append", "v": rec} for rec in self._events
            )
