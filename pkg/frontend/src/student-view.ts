// Student watch view.
//
// Sits next to the embedded player: four response buttons, a question
// form with a subtitle-inclusion toggle, and the thread list for the
// video. Play/pause on the player is forwarded to the server as
// start/stop watch events. Everything rendered is read back from the
// API — the view holds no state of its own beyond the open form.

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml, mustFind } from "./dom.js";
import type { EmbeddedPlayer, PlayerState } from "./player.js";
import { readPlayerState } from "./player.js";
import { Poller, type PollerOptions } from "./poller.js";
import {
  RESPONSE_KINDS,
  formatTime,
  type AnnotationPayload,
  type ResponseKind,
  type ResponseListPayload,
  type ResponsePayload,
  type VideoPayload,
} from "./types.js";

export interface StudentViewOptions {
  api: ApiClient;
  player: EmbeddedPlayer;
  video: VideoPayload;
  /** Override polling cadence (tests); defaults follow the 2 s / 10 s rule. */
  poll?: PollerOptions;
}

export interface StudentView {
  readonly element: HTMLElement;
  readonly poller: Poller;
  /** Re-fetch the thread list and re-render it. */
  refresh(): Promise<ResponseListPayload>;
  /** Snapshot of the player as the view sees it. */
  playerState(): PlayerState;
  destroy(): void;
}

// -- templates ---------------------------------------------------------------

const viewTemplate = (video: VideoPayload) => `
  <section class="student-view">
    <header>
      <h2 data-element="video-title">${escapeHtml(video.title)}</h2>
      <span class="duration">${formatTime(video.duration_s)}</span>
    </header>
    <div data-element="annotation-strip" class="annotation-strip"></div>
    <div class="response-buttons">
      ${RESPONSE_KINDS.map(
        (kind) => `
        <button type="button" data-element="response-button" data-kind="${kind}">
          ${kind}
        </button>`,
      ).join("")}
    </div>
    <form data-element="question-form" class="question-form" hidden>
      <p data-element="question-at"></p>
      <textarea data-element="question-text" rows="3" placeholder="What do you want to ask?"></textarea>
      <label class="toggle">
        <input type="checkbox" data-element="include-subtitles" checked />
        Include subtitles around this moment
      </label>
      <div class="form-actions">
        <button type="submit" data-element="question-submit">Ask</button>
        <button type="button" data-element="question-cancel">Cancel</button>
      </div>
    </form>
    <p data-element="status" class="status" hidden></p>
    <ul data-element="response-list" class="response-list"></ul>
  </section>
`;

const responseItem = (response: ResponsePayload) => `
  <li class="response-item" data-element="response-item" data-response-id="${response.response_id}">
    <div class="response-head">
      <span class="kind kind-${response.kind.toLowerCase()}">${response.kind}</span>
      <span data-element="response-time" class="time">${formatTime(response.timeline_s)}</span>
      <span class="author">${escapeHtml(response.user_id)}</span>
    </div>
    ${
      response.question_text !== null
        ? `<p data-element="question-body" class="question-body">${escapeHtml(response.question_text)}</p>`
        : ""
    }
    ${
      response.answer_pending
        ? `<p data-element="answer-pending" class="answer-pending">answer pending…</p>`
        : ""
    }
    <ul class="replies">
      ${response.replies
        .map(
          (reply) => `
        <li class="reply" data-element="reply" data-reply-id="${reply.reply_id}" data-author-kind="${reply.author_kind}">
          <span class="reply-author">${reply.author_kind}</span>
          <span data-element="reply-body" class="reply-body">${escapeHtml(reply.body)}</span>
        </li>`,
        )
        .join("")}
    </ul>
  </li>
`;

const annotationChip = (annotation: AnnotationPayload) => `
  <span class="annotation annotation-${annotation.kind}" data-element="annotation"
        data-annotation-id="${annotation.annotation_id}"
        title="${escapeHtml(annotation.body)}">
    ${formatTime(annotation.timeline_start_s)} ${escapeHtml(annotation.body)}
  </span>
`;

// -- view --------------------------------------------------------------------

/**
 * Mount the student view into `container`.
 *
 * The timeline value sent with every response is the playhead position
 * read when its button was pressed — for questions that is the moment
 * the Question button opened the form, not the moment Ask was clicked.
 */
export function createStudentView(
  container: HTMLElement,
  options: StudentViewOptions,
): StudentView {
  const { api, player, video } = options;
  container.innerHTML = viewTemplate(video);

  const form = mustFind<HTMLFormElement>(container, "question-form");
  const questionAt = mustFind<HTMLParagraphElement>(container, "question-at");
  const questionText = mustFind<HTMLTextAreaElement>(container, "question-text");
  const includeSubtitles = mustFind<HTMLInputElement>(container, "include-subtitles");
  const statusLine = mustFind<HTMLParagraphElement>(container, "status");
  const responseList = mustFind<HTMLUListElement>(container, "response-list");
  const annotationStrip = mustFind<HTMLDivElement>(container, "annotation-strip");

  // playhead captured when the Question button was pressed
  let questionTimelineS: number | null = null;

  const showError = (err: unknown) => {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    statusLine.textContent = message;
    statusLine.hidden = false;
  };

  const clearError = () => {
    statusLine.textContent = "";
    statusLine.hidden = true;
  };

  const render = (payload: ResponseListPayload) => {
    responseList.innerHTML = payload.responses.map(responseItem).join("");
    annotationStrip.innerHTML = payload.annotations.map(annotationChip).join("");
  };

  // Fetches can settle out of order (a poll tick racing a post-submit
  // refresh); only the newest one may paint.
  let refreshSeq = 0;
  const refresh = async (): Promise<ResponseListPayload> => {
    const seq = ++refreshSeq;
    const payload = await api.listResponses(video.video_id);
    if (seq === refreshSeq) render(payload);
    return payload;
  };

  // One poll tick: re-fetch, re-render, and report whether every visible
  // answer job has settled.
  const poller = new Poller(async () => {
    const payload = await refresh();
    return !payload.responses.some((r) => r.answer_pending);
  }, options.poll);

  const ensurePolling = () => {
    if (!poller.active) poller.start();
  };

  const submit = async (kind: ResponseKind, timelineS: number, text?: string) => {
    clearError();
    try {
      const created = await api.submitResponse(video.video_id, {
        kind,
        timeline_s: timelineS,
        question_text: text,
        include_subtitles: kind === "Question" ? includeSubtitles.checked : undefined,
      });
      const payload = await refresh();
      if (created.job_id !== null || payload.responses.some((r) => r.answer_pending)) {
        ensurePolling();
      }
    } catch (err) {
      showError(err);
    }
  };

  // -- event wiring -----------------------------------------------------------

  container.querySelectorAll<HTMLButtonElement>('[data-element="response-button"]').forEach(
    (button) => {
      button.addEventListener("click", () => {
        const kind = button.dataset.kind as ResponseKind;
        const pressedAt = player.currentTime(); // read once, at the press
        if (kind === "Question") {
          questionTimelineS = pressedAt;
          questionAt.textContent = `Question at ${formatTime(pressedAt)}`;
          form.hidden = false;
          questionText.focus();
        } else {
          void submit(kind, pressedAt);
        }
      });
    },
  );

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (questionTimelineS === null) return;
    const timelineS = questionTimelineS;
    const text = questionText.value;
    form.hidden = true;
    questionText.value = "";
    questionTimelineS = null;
    void submit("Question", timelineS, text);
  });

  mustFind<HTMLButtonElement>(container, "question-cancel").addEventListener("click", () => {
    form.hidden = true;
    questionText.value = "";
    questionTimelineS = null;
  });

  const sendEvent = (kind: "start_watching" | "stop_watching") => {
    api.recordEvent(video.video_id, kind, player.currentTime()).catch(showError);
  };
  player.onPlay(() => sendEvent("start_watching"));
  player.onPause(() => sendEvent("stop_watching"));

  // initial load; keep polling if an answer is already on its way
  void refresh()
    .then((payload) => {
      if (payload.responses.some((r) => r.answer_pending)) ensurePolling();
    })
    .catch(showError);

  return {
    element: container,
    poller,
    refresh,
    playerState: () => readPlayerState(player, video),
    destroy: () => {
      poller.stop();
      container.innerHTML = "";
    },
  };
}
