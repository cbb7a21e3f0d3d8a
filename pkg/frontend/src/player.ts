// Player abstraction.
//
// The views never touch the hosting platform's embed object directly;
// they read the playhead and subscribe to play/pause through this
// interface. That keeps the timeline-fidelity rule in one place: a
// response carries the playhead position read at the moment the button
// was pressed, never wall-clock time.

import type { VideoPayload } from "./types.js";

/** Snapshot of the player at one instant. */
export interface PlayerState {
  timeline_s: number;
  playing: boolean;
  video: VideoPayload | null;
}

/** The slice of a platform embed API the views need. */
export interface EmbeddedPlayer {
  /** Current playhead position in seconds. */
  currentTime(): number;
  isPlaying(): boolean;
  onPlay(listener: () => void): void;
  onPause(listener: () => void): void;
}

/** Read a consistent snapshot of the player. */
export function readPlayerState(player: EmbeddedPlayer, video: VideoPayload | null): PlayerState {
  return {
    timeline_s: player.currentTime(),
    playing: player.isPlaying(),
    video,
  };
}

/**
 * Adapter over a plain <video> element. The element's play/pause events
 * drive the watch-event stream, whoever initiated them (user, script,
 * or the platform chrome).
 */
export class Html5Player implements EmbeddedPlayer {
  private readonly el: HTMLVideoElement;

  constructor(el: HTMLVideoElement) {
    this.el = el;
  }

  currentTime(): number {
    return this.el.currentTime;
  }

  isPlaying(): boolean {
    return !this.el.paused;
  }

  onPlay(listener: () => void): void {
    this.el.addEventListener("play", listener);
  }

  onPause(listener: () => void): void {
    this.el.addEventListener("pause", listener);
  }
}

/**
 * Player driven entirely by method calls — no media element behind it.
 * Stands in for a platform embed wherever real playback is unavailable
 * (scripted sessions, environments without codecs).
 */
export class ManualPlayer implements EmbeddedPlayer {
  private position = 0;
  private playing = false;
  private playListeners: Array<() => void> = [];
  private pauseListeners: Array<() => void> = [];

  currentTime(): number {
    return this.position;
  }

  isPlaying(): boolean {
    return this.playing;
  }

  onPlay(listener: () => void): void {
    this.playListeners.push(listener);
  }

  onPause(listener: () => void): void {
    this.pauseListeners.push(listener);
  }

  seek(seconds: number): void {
    this.position = seconds;
  }

  play(): void {
    if (this.playing) return;
    this.playing = true;
    this.playListeners.forEach((fn) => fn());
  }

  pause(): void {
    if (!this.playing) return;
    this.playing = false;
    this.pauseListeners.forEach((fn) => fn());
  }
}
