// Page entry point.
//
// Wires the connect form, the video picker and the role tabs to the
// two views. Playback in this shell goes through a ManualPlayer with
// on-page transport controls; a deployment that embeds the hosting
// platform's player swaps in an adapter (see Html5Player) without
// touching the views.

import { ApiClient } from "./api.js";
import { ManualPlayer } from "./player.js";
import { createStudentView, type StudentView } from "./student-view.js";
import { createTeacherDashboard, type TeacherDashboard } from "./teacher-view.js";
import { formatTime, type VideoPayload } from "./types.js";

const connectForm = document.querySelector<HTMLFormElement>('[data-element="connect-form"]');
const baseInput = document.querySelector<HTMLInputElement>('[data-element="base-url"]');
const tokenInput = document.querySelector<HTMLInputElement>('[data-element="token"]');
const connectStatus = document.querySelector<HTMLElement>('[data-element="connect-status"]');
const videoSelect = document.querySelector<HTMLSelectElement>('[data-element="video-select"]');
const studentTab = document.querySelector<HTMLButtonElement>('[data-element="tab-student"]');
const teacherTab = document.querySelector<HTMLButtonElement>('[data-element="tab-teacher"]');
const viewContainer = document.querySelector<HTMLElement>('[data-element="view"]');
const transport = document.querySelector<HTMLElement>('[data-element="transport"]');
const playButton = document.querySelector<HTMLButtonElement>('[data-element="play-toggle"]');
const seekInput = document.querySelector<HTMLInputElement>('[data-element="seek"]');
const playheadLabel = document.querySelector<HTMLElement>('[data-element="playhead"]');

let api: ApiClient | null = null;
let videos: VideoPayload[] = [];
let view: StudentView | TeacherDashboard | null = null;
let activeTab: "student" | "teacher" = "student";
const player = new ManualPlayer();

const currentVideo = (): VideoPayload | null =>
  videos.find((v) => v.video_id === videoSelect?.value) ?? null;

const updateTransport = () => {
  if (playButton) playButton.textContent = player.isPlaying() ? "Pause" : "Play";
  if (playheadLabel) playheadLabel.textContent = formatTime(player.currentTime());
};

const mountView = () => {
  const video = currentVideo();
  if (!api || !video || !viewContainer) return;
  view?.destroy();
  if (activeTab === "student") {
    view = createStudentView(viewContainer, { api, player, video });
    if (transport) transport.hidden = false;
    if (seekInput) seekInput.max = String(Math.floor(video.duration_s));
  } else {
    view = createTeacherDashboard(viewContainer, { api, video });
    if (transport) transport.hidden = true;
  }
  studentTab?.classList.toggle("active", activeTab === "student");
  teacherTab?.classList.toggle("active", activeTab === "teacher");
};

connectForm?.addEventListener("submit", (event) => {
  event.preventDefault();
  const base = baseInput?.value || window.location.origin;
  api = new ApiClient(base, tokenInput?.value ?? "");
  api
    .health()
    .then((health) => {
      console.log("connected", health);
      if (connectStatus) {
        connectStatus.textContent = `connected · answers ${health.llm_enabled ? "on" : "off"}`;
      }
      return api!.listVideos();
    })
    .then((payload) => {
      videos = payload.videos;
      if (videoSelect) {
        videoSelect.innerHTML = videos
          .map((v) => `<option value="${v.video_id}">${v.title}</option>`)
          .join("");
        videoSelect.disabled = videos.length === 0;
      }
      mountView();
    })
    .catch((err) => {
      if (connectStatus) connectStatus.textContent = String(err);
    });
});

videoSelect?.addEventListener("change", mountView);
studentTab?.addEventListener("click", () => {
  activeTab = "student";
  mountView();
});
teacherTab?.addEventListener("click", () => {
  activeTab = "teacher";
  mountView();
});

playButton?.addEventListener("click", () => {
  if (player.isPlaying()) {
    player.pause();
  } else {
    player.play();
  }
  updateTransport();
});

seekInput?.addEventListener("input", () => {
  player.seek(Number(seekInput.value));
  updateTransport();
});

updateTransport();
