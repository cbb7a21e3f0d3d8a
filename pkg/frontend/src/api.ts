// HTTP client for the preparation-learning service.
//
// Thin fetch wrapper: one method per documented endpoint, bearer token
// auth, and typed payloads. The views talk to the server only through
// this module.

import type {
  AnalyticsPayload,
  AnnotationKind,
  AnnotationPayload,
  EventAck,
  HealthPayload,
  JobPayload,
  QuestionRow,
  ReplyPayload,
  ResponseKind,
  ResponseListPayload,
  SubmitResponsePayload,
  VideoPayload,
} from "./types.js";

/** Error payload the server attaches to non-2xx answers. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

export interface SubmitResponseInput {
  kind: ResponseKind;
  timeline_s: number;
  question_text?: string;
  include_subtitles?: boolean;
}

export interface AnnotationInput {
  kind: AnnotationKind;
  timeline_start_s: number;
  timeline_end_s?: number | null;
  body?: string;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token: string;

  constructor(baseUrl: string, token: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {
      method,
      headers: { Authorization: `Bearer ${this.token}` },
    };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) {
      let code = "http_error";
      let message = `${method} ${path} failed with ${resp.status}`;
      try {
        const payload = await resp.json();
        if (payload && typeof payload.detail === "object" && payload.detail !== null) {
          code = payload.detail.error ?? code;
          message = payload.detail.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<HealthPayload> {
    return this.request("GET", "/healthz");
  }

  listVideos(): Promise<{ videos: VideoPayload[] }> {
    return this.request("GET", "/videos");
  }

  getVideo(videoId: string): Promise<VideoPayload> {
    return this.request("GET", `/videos/${videoId}`);
  }

  /** Post a timestamped response; the timeline value must be the player position at button press. */
  submitResponse(videoId: string, input: SubmitResponseInput): Promise<SubmitResponsePayload> {
    return this.request("POST", `/videos/${videoId}/responses`, input);
  }

  listResponses(videoId: string): Promise<ResponseListPayload> {
    return this.request("GET", `/videos/${videoId}/responses`);
  }

  addReply(responseId: string, body: string): Promise<ReplyPayload> {
    return this.request("POST", `/responses/${responseId}/replies`, { body });
  }

  teacherQuestions(videoId: string): Promise<{ questions: QuestionRow[] }> {
    return this.request("GET", `/videos/${videoId}/questions`);
  }

  recordEvent(
    videoId: string,
    kind: "start_watching" | "stop_watching",
    timelineS: number,
  ): Promise<EventAck> {
    return this.request("POST", `/videos/${videoId}/events`, {
      kind,
      timeline_s: timelineS,
    });
  }

  analytics(videoId: string, bucketS = 30.0): Promise<AnalyticsPayload> {
    return this.request("GET", `/videos/${videoId}/analytics?bucket_s=${bucketS}`);
  }

  listAnnotations(videoId: string): Promise<{ annotations: AnnotationPayload[] }> {
    return this.request("GET", `/videos/${videoId}/annotations`);
  }

  addAnnotation(videoId: string, input: AnnotationInput): Promise<AnnotationPayload> {
    return this.request("POST", `/videos/${videoId}/annotations`, input);
  }

  deleteAnnotation(annotationId: string): Promise<{ deleted: string }> {
    return this.request("DELETE", `/annotations/${annotationId}`);
  }

  retryAnswer(responseId: string): Promise<JobPayload> {
    return this.request("POST", `/responses/${responseId}/retry`);
  }
}
