// Teacher dashboard.
//
// One table row per question on the video: who asked, where on the
// timeline, the thread so far, and the answer job's state. Rows carry
// an inline reply box, and a retry button when the job failed. Below
// the table: the annotation editor (steering marks and captions) and a
// response heatmap fed by the analytics endpoint.

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml, mustFind } from "./dom.js";
import { Poller, type PollerOptions } from "./poller.js";
import {
  formatTime,
  type AnalyticsPayload,
  type AnnotationKind,
  type AnnotationPayload,
  type QuestionRow,
  type VideoPayload,
} from "./types.js";

export interface TeacherDashboardOptions {
  api: ApiClient;
  video: VideoPayload;
  /** Histogram bucket width in seconds (default 30). */
  bucketS?: number;
  /** Override polling cadence (tests); defaults follow the 2 s / 10 s rule. */
  poll?: PollerOptions;
}

export interface TeacherDashboard {
  readonly element: HTMLElement;
  readonly poller: Poller;
  /** Re-fetch questions, annotations and analytics, then re-render. */
  refresh(): Promise<QuestionRow[]>;
  destroy(): void;
}

// -- templates ---------------------------------------------------------------

const dashboardTemplate = (video: VideoPayload) => `
  <section class="teacher-dashboard">
    <header>
      <h2 data-element="video-title">${escapeHtml(video.title)}</h2>
      <span class="duration">${formatTime(video.duration_s)}</span>
    </header>
    <div data-element="heatmap" class="heatmap"></div>
    <div data-element="coverage" class="coverage"></div>
    <table class="question-table">
      <thead>
        <tr>
          <th>Student</th><th>Time</th><th>Question</th>
          <th>Thread</th><th>Job</th><th>Actions</th>
        </tr>
      </thead>
      <tbody data-element="question-rows"></tbody>
    </table>
    <section class="annotations">
      <h3>Annotations</h3>
      <ul data-element="annotation-list"></ul>
      <form data-element="annotation-form" class="annotation-form">
        <select data-element="annotation-kind">
          <option value="steering_mark">steering mark</option>
          <option value="caption">caption</option>
        </select>
        <input data-element="annotation-start" type="number" min="0" step="any" placeholder="start s" />
        <input data-element="annotation-end" type="number" min="0" step="any" placeholder="end s (captions)" />
        <input data-element="annotation-body" type="text" placeholder="text" />
        <button type="submit" data-element="annotation-add">Add</button>
      </form>
    </section>
    <p data-element="status" class="status" hidden></p>
  </section>
`;

const jobCell = (row: QuestionRow) => {
  if (!row.job) return `<span data-element="job-status" data-status="none">—</span>`;
  const { status, attempts } = row.job;
  return `
    <span data-element="job-status" data-status="${status}">${status}</span>
    <span class="attempts">(${attempts} attempt${attempts === 1 ? "" : "s"})</span>
  `;
};

const questionRowTemplate = (row: QuestionRow) => `
  <tr data-element="question-row" data-response-id="${row.response_id}">
    <td data-element="row-student">${escapeHtml(row.user_id)}</td>
    <td data-element="row-time">${formatTime(row.timeline_s)}</td>
    <td data-element="row-question">${escapeHtml(row.question_text ?? "")}</td>
    <td>
      <ul class="thread">
        ${row.replies
          .map(
            (reply) => `
          <li data-element="reply" data-reply-id="${reply.reply_id}" data-author-kind="${reply.author_kind}">
            <span class="reply-author">${reply.author_kind}</span>
            <span data-element="reply-body">${escapeHtml(reply.body)}</span>
          </li>`,
          )
          .join("")}
      </ul>
      ${row.answer_pending ? `<p data-element="answer-pending">answer pending…</p>` : ""}
    </td>
    <td>${jobCell(row)}</td>
    <td>
      <input data-element="reply-input" type="text" placeholder="reply…" />
      <button type="button" data-element="reply-button">Reply</button>
      ${row.job_failed ? `<button type="button" data-element="retry-button">Retry</button>` : ""}
    </td>
  </tr>
`;

const annotationItem = (annotation: AnnotationPayload) => `
  <li data-element="annotation-item" data-annotation-id="${annotation.annotation_id}"
      data-kind="${annotation.kind}">
    <span class="annotation-range">
      ${formatTime(annotation.timeline_start_s)}${
        annotation.timeline_end_s !== null ? `–${formatTime(annotation.timeline_end_s)}` : ""
      }
    </span>
    <span class="annotation-kind">${annotation.kind}</span>
    <span data-element="annotation-text">${escapeHtml(annotation.body)}</span>
    <button type="button" data-element="annotation-delete">✕</button>
  </li>
`;

// -- heatmap -----------------------------------------------------------------

/**
 * Render the response histogram as a strip of cells, one per bucket,
 * shaded by how many responses landed in it. The per-kind breakdown
 * goes in the cell's title; the raw total rides along as data-total.
 */
export function renderHeatmap(container: HTMLElement, analytics: AnalyticsPayload): void {
  const { buckets, bucket_s } = analytics.histogram;
  const totals = buckets.map((b) =>
    Object.values(b.counts).reduce((sum, n) => sum + n, 0),
  );
  const peak = Math.max(1, ...totals);
  container.innerHTML = buckets
    .map((bucket, i) => {
      const total = totals[i];
      const breakdown = Object.entries(bucket.counts)
        .map(([kind, n]) => `${kind} ${n}`)
        .join(" · ");
      const label = `${formatTime(bucket.start_s)}–${formatTime(bucket.start_s + bucket_s)}`;
      return `
        <span class="heat-cell" data-element="heat-cell"
              data-start-s="${bucket.start_s}" data-total="${total}"
              style="opacity: ${total === 0 ? 0.08 : (0.25 + 0.75 * total / peak).toFixed(3)}"
              title="${escapeHtml(breakdown ? `${label} · ${breakdown}` : label)}"></span>
      `;
    })
    .join("");
}

const coverageRow = (userId: string, fraction: number) => `
  <div data-element="coverage-row" data-user-id="${escapeHtml(userId)}" data-fraction="${fraction}">
    ${escapeHtml(userId)} watched ${(fraction * 100).toFixed(0)}%
  </div>
`;

// -- dashboard ---------------------------------------------------------------

/** Mount the teacher dashboard into `container`. */
export function createTeacherDashboard(
  container: HTMLElement,
  options: TeacherDashboardOptions,
): TeacherDashboard {
  const { api, video } = options;
  const bucketS = options.bucketS ?? 30.0;
  container.innerHTML = dashboardTemplate(video);

  const rowsBody = mustFind<HTMLTableSectionElement>(container, "question-rows");
  const annotationList = mustFind<HTMLUListElement>(container, "annotation-list");
  const annotationForm = mustFind<HTMLFormElement>(container, "annotation-form");
  const heatmap = mustFind<HTMLDivElement>(container, "heatmap");
  const coverage = mustFind<HTMLDivElement>(container, "coverage");
  const statusLine = mustFind<HTMLParagraphElement>(container, "status");

  const showError = (err: unknown) => {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    statusLine.textContent = message;
    statusLine.hidden = false;
  };

  const clearError = () => {
    statusLine.textContent = "";
    statusLine.hidden = true;
  };

  // Rebuilding the tbody drops old listeners with the old nodes, so the
  // row actions are re-bound after every render.
  const bindRowActions = () => {
    rowsBody.querySelectorAll<HTMLTableRowElement>('[data-element="question-row"]').forEach(
      (tr) => {
        const responseId = tr.dataset.responseId!;
        const input = mustFind<HTMLInputElement>(tr, "reply-input");
        mustFind<HTMLButtonElement>(tr, "reply-button").addEventListener("click", () => {
          clearError();
          api
            .addReply(responseId, input.value)
            .then(() => refresh())
            .catch(showError);
        });
        const retry = tr.querySelector<HTMLButtonElement>('[data-element="retry-button"]');
        retry?.addEventListener("click", () => {
          clearError();
          api
            .retryAnswer(responseId)
            .then(() => {
              ensurePolling(); // a fresh job is pending; watch it settle
              return refresh();
            })
            .catch(showError);
        });
      },
    );
  };

  const renderQuestions = (rows: QuestionRow[]) => {
    rowsBody.innerHTML = rows.map(questionRowTemplate).join("");
    bindRowActions();
  };

  const renderAnnotations = (annotations: AnnotationPayload[]) => {
    annotationList.innerHTML = annotations.map(annotationItem).join("");
    annotationList
      .querySelectorAll<HTMLLIElement>('[data-element="annotation-item"]')
      .forEach((li) => {
        mustFind<HTMLButtonElement>(li, "annotation-delete").addEventListener("click", () => {
          clearError();
          api
            .deleteAnnotation(li.dataset.annotationId!)
            .then(() => refresh())
            .catch(showError);
        });
      });
  };

  const renderCoverage = (analytics: AnalyticsPayload) => {
    coverage.innerHTML = Object.entries(analytics.coverage)
      .map(([userId, c]) => coverageRow(userId, c.fraction))
      .join("");
  };

  // Fetches can settle out of order (a poll tick racing a post-action
  // refresh); only the newest one may paint.
  let refreshSeq = 0;
  const refresh = async (): Promise<QuestionRow[]> => {
    const seq = ++refreshSeq;
    const [questions, annotations, analytics] = await Promise.all([
      api.teacherQuestions(video.video_id),
      api.listAnnotations(video.video_id),
      api.analytics(video.video_id, bucketS),
    ]);
    if (seq === refreshSeq) {
      renderQuestions(questions.questions);
      renderAnnotations(annotations.annotations);
      renderHeatmap(heatmap, analytics);
      renderCoverage(analytics);
    }
    return questions.questions;
  };

  // Poll while any question still has an active answer job.
  const poller = new Poller(async () => {
    const rows = await refresh();
    return !rows.some((row) => row.answer_pending);
  }, options.poll);

  const ensurePolling = () => {
    if (!poller.active) poller.start();
  };

  annotationForm.addEventListener("submit", (event) => {
    event.preventDefault();
    clearError();
    const kind = mustFind<HTMLSelectElement>(annotationForm, "annotation-kind")
      .value as AnnotationKind;
    const start = mustFind<HTMLInputElement>(annotationForm, "annotation-start").value;
    const end = mustFind<HTMLInputElement>(annotationForm, "annotation-end").value;
    const body = mustFind<HTMLInputElement>(annotationForm, "annotation-body").value;
    api
      .addAnnotation(video.video_id, {
        kind,
        timeline_start_s: Number(start),
        // steering marks are points; only captions carry an end
        timeline_end_s: kind === "caption" && end !== "" ? Number(end) : undefined,
        body,
      })
      .then(() => {
        annotationForm.reset();
        return refresh();
      })
      .catch(showError);
  });

  // initial load; keep watching if a job is already in flight
  void refresh()
    .then((rows) => {
      if (rows.some((row) => row.answer_pending)) ensurePolling();
    })
    .catch(showError);

  return {
    element: container,
    poller,
    refresh,
    destroy: () => {
      poller.stop();
      container.innerHTML = "";
    },
  };
}
