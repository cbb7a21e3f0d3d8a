"""Timeline views of collected behavior: response-density histograms per
kind and per-student watch coverage, computed over a store snapshot."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import ResponseKind, WatchEventKind
from .store import Store


@dataclass(frozen=True)
class HistogramBucket:
    start_s: float
    counts: dict[str, int]


@dataclass(frozen=True)
class TimelineHistogram:
    bucket_s: float
    buckets: tuple[HistogramBucket, ...]
    totals: dict[str, int]

    def to_record(self) -> dict:
        return {
            "bucket_s": self.bucket_s,
            "buckets": [{"start_s": b.start_s, "counts": dict(b.counts)} for b in self.buckets],
            "totals": dict(self.totals),
        }


@dataclass(frozen=True)
class WatchCoverage:
    fraction: float
    intervals: tuple[tuple[float, float], ...]

    def to_record(self) -> dict:
        return {
            "fraction": self.fraction,
            "intervals": [[a, b] for a, b in self.intervals],
        }


def response_histogram(store: Store, video_id: str, bucket_s: float) -> TimelineHistogram:
    """Count each response in exactly one bucket by floor(timeline / bucket_s).

    A response at exactly the video's end lands in the last bucket. Bucket
    count is ceil(duration / bucket_s).
    """
    if bucket_s <= 0:
        raise ValueError("bucket_s must be positive")
    video = store.get_video(video_id)  # NotFound propagates for unknown videos
    n_buckets = math.ceil(video.duration_s / bucket_s)
    kinds = [k.value for k in ResponseKind]
    counts = [{k: 0 for k in kinds} for _ in range(n_buckets)]
    totals = {k: 0 for k in kinds}
    for response in store.list_responses(video_id=video_id):
        if n_buckets == 0:
            break
        idx = min(int(response.timeline_s // bucket_s), n_buckets - 1)
        counts[idx][response.kind.value] += 1
        totals[response.kind.value] += 1
    return TimelineHistogram(
        bucket_s=bucket_s,
        buckets=tuple(
            HistogramBucket(start_s=i * bucket_s, counts=c) for i, c in enumerate(counts)
        ),
        totals=totals,
    )


def watch_intervals(events) -> list[tuple[float, float]]:
    """Pair start/stop events in timeline order into watched intervals.

    A start opens a stretch; stops while it is open push its close later; a
    later start finalizes the closed stretch and opens the next. A start
    never closed by any stop closes at the last observed event's timeline
    position, so coverage never overestimates past observed activity.
    Empty stretches are dropped.
    """
    ordered = sorted(events, key=lambda e: (e.timeline_s, e.created_at, e.event_id))
    intervals: list[tuple[float, float]] = []
    open_t: float | None = None
    close_t: float | None = None
    last_t: float | None = None
    for event in ordered:
        t = event.timeline_s
        last_t = t
        if event.kind is WatchEventKind.START_WATCHING:
            if open_t is None:
                open_t = t
                close_t = None
            elif close_t is not None:
                if close_t > open_t:
                    intervals.append((open_t, close_t))
                open_t = t
                close_t = None
        elif event.kind is WatchEventKind.STOP_WATCHING:
            if open_t is not None:
                close_t = t
    if open_t is not None:
        end = close_t if close_t is not None else last_t
        if end is not None and end > open_t:
            intervals.append((open_t, end))
    return intervals


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def watch_coverage(store: Store, video_id: str, user_id: str) -> WatchCoverage:
    """Fraction of the video the user has watched, with the merged intervals."""
    video = store.get_video(video_id)
    events = store.list_events(video_id=video_id, user_id=user_id)
    merged = _merge(watch_intervals(events))
    covered = sum(end - start for start, end in merged)
    if video.duration_s > 0:
        fraction = min(1.0, covered / video.duration_s)
    else:
        fraction = 0.0
    return WatchCoverage(fraction=fraction, intervals=tuple(merged))
