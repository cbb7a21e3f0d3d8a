// Polling loop with slow-down.
//
// Async answers arrive out of band, so the client re-fetches until the
// server says the job is settled. Cadence: every 2 s at first; once a
// minute has gone by without an answer, drop to every 10 s so an
// abandoned tab stops hammering the server.

export interface PollerOptions {
  /** Delay between ticks while fresh (default 2000 ms). */
  intervalMs?: number;
  /** Delay between ticks once stale (default 10000 ms). */
  slowIntervalMs?: number;
  /** Age at which the poller goes stale (default 60000 ms). */
  slowAfterMs?: number;
}

export const DEFAULT_INTERVAL_MS = 2_000;
export const DEFAULT_SLOW_INTERVAL_MS = 10_000;
export const DEFAULT_SLOW_AFTER_MS = 60_000;

/**
 * Repeatedly runs `tick` until it resolves true (the wait is over) or
 * `stop()` is called. Ticks never overlap: the next one is scheduled
 * only after the previous settles. A tick that throws counts as "not
 * done" — the loop logs and keeps going.
 */
export class Poller {
  private readonly tick: () => Promise<boolean>;
  private readonly intervalMs: number;
  private readonly slowIntervalMs: number;
  private readonly slowAfterMs: number;

  private timer: ReturnType<typeof setTimeout> | null = null;
  private startedAt = 0;
  private running = false;

  constructor(tick: () => Promise<boolean>, options: PollerOptions = {}) {
    this.tick = tick;
    this.intervalMs = options.intervalMs ?? DEFAULT_INTERVAL_MS;
    this.slowIntervalMs = options.slowIntervalMs ?? DEFAULT_SLOW_INTERVAL_MS;
    this.slowAfterMs = options.slowAfterMs ?? DEFAULT_SLOW_AFTER_MS;
  }

  get active(): boolean {
    return this.running;
  }

  /** Begin polling; restarting resets the slow-down clock. */
  start(): void {
    this.stop();
    this.running = true;
    this.startedAt = Date.now();
    this.schedule();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private schedule(): void {
    const stale = Date.now() - this.startedAt >= this.slowAfterMs;
    const delay = stale ? this.slowIntervalMs : this.intervalMs;
    this.timer = setTimeout(() => void this.run(), delay);
  }

  private async run(): Promise<void> {
    this.timer = null;
    let done = false;
    try {
      done = await this.tick();
    } catch (err) {
      console.error("poll tick failed; will retry", err);
    }
    if (!this.running) return; // stopped while the tick was in flight
    if (done) {
      this.stop();
      return;
    }
    this.schedule();
  }
}
