// Wire types for the preparation-learning service API.
//
// Every interface here mirrors a JSON payload the server actually returns;
// the views render these objects and nothing else. If a field is missing
// here it is missing on the wire too.

export type Role = "student" | "teacher";

export type ResponseKind = "Interesting" | "Important" | "Difficult" | "Question";

export const RESPONSE_KINDS: ResponseKind[] = [
  "Interesting",
  "Important",
  "Difficult",
  "Question",
];

export type AuthorKind = "assistant" | "teacher" | "student";

export type JobStatus = "pending" | "in_flight" | "done" | "failed";

export interface VideoPayload {
  video_id: string;
  title: string;
  external_source_id: string;
  duration_s: number;
  group_ids: string[];
  subtitle_track_id: string | null;
}

export interface ReplyPayload {
  reply_id: string;
  response_id: string;
  author_kind: AuthorKind;
  author_id: string | null;
  body: string;
  prompt_snapshot: unknown | null;
  model_id: string | null;
  created_at: string;
}

export interface JobPayload {
  job_id: string;
  response_id: string;
  status: JobStatus;
  attempts: number;
  last_error: string | null;
  enqueued_at: string;
  finished_at: string | null;
}

export interface ResponsePayload {
  response_id: string;
  user_id: string;
  video_id: string;
  timeline_s: number;
  kind: ResponseKind;
  question_text: string | null;
  include_subtitles: boolean;
  created_at: string;
  replies: ReplyPayload[];
  answer_pending: boolean;
  // only present when the caller holds a teacher credential
  job?: JobPayload | null;
}

/** One row of the teacher dashboard: a question plus its job verdict. */
export interface QuestionRow extends ResponsePayload {
  job: JobPayload | null;
  job_failed: boolean;
}

export interface SubmitResponsePayload extends Omit<ResponsePayload, "replies" | "answer_pending"> {
  job_id: string | null;
}

export type AnnotationKind = "steering_mark" | "caption";

export interface AnnotationPayload {
  annotation_id: string;
  video_id: string;
  kind: AnnotationKind;
  timeline_start_s: number;
  timeline_end_s: number | null;
  body: string;
}

export interface ResponseListPayload {
  responses: ResponsePayload[];
  annotations: AnnotationPayload[];
}

export interface HistogramBucket {
  start_s: number;
  counts: Record<string, number>;
}

export interface AnalyticsPayload {
  video_id: string;
  histogram: {
    bucket_s: number;
    buckets: HistogramBucket[];
    totals: Record<string, number>;
  };
  coverage: Record<string, { fraction: number; intervals: [number, number][] }>;
}

export interface EventAck {
  event_id: string;
  created_at: string;
}

export interface HealthPayload {
  status: string;
  llm_enabled: boolean;
}

/**
 * Format a timeline position in seconds as MM:SS, or H:MM:SS past the hour.
 *
 * @example
 * formatTime(95)    // "01:35"
 * formatTime(3725)  // "1:02:05"
 */
export function formatTime(seconds: number): string {
  const total = Math.max(0, Math.floor(seconds));
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  const mm = String(m).padStart(2, "0");
  const ss = String(s).padStart(2, "0");
  return h > 0 ? `${h}:${mm}:${ss}` : `${mm}:${ss}`;
}
