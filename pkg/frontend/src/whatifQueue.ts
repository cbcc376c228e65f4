// Debounced what-if dispatcher: at most one request in flight per view,
// newer requests supersede queued ones, and stale responses never overwrite
// newer ones (sequence-number guard).

import type { WhatIfResponse } from "./types.js";

export class WhatIfQueue {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private pendingDelta: number | null = null;
  private sequence = 0;
  private appliedSequence = 0;
  private idleWaiters: Array<() => void> = [];

  constructor(
    private readonly send: (delta: number) => Promise<WhatIfResponse>,
    private readonly apply: (response: WhatIfResponse) => void,
    private readonly fail: (error: unknown) => void = () => {},
    private readonly debounceMs = 120,
  ) {}

  request(delta: number): void {
    this.pendingDelta = delta;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.pump();
    }, this.debounceMs);
  }

  get busy(): boolean {
    return this.inFlight || this.pendingDelta !== null || this.timer !== null;
  }

  /** Resolves once nothing is queued, debouncing, or in flight. */
  idle(): Promise<void> {
    if (!this.busy) return Promise.resolve();
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  private pump(): void {
    if (this.inFlight) return;
    if (this.pendingDelta === null) {
      this.settleIdle();
      return;
    }
    const delta = this.pendingDelta;
    this.pendingDelta = null;
    const seq = ++this.sequence;
    this.inFlight = true;
    this.send(delta)
      .then(
        (response) => {
          if (seq > this.appliedSequence) {
            this.appliedSequence = seq;
            this.apply(response);
          }
        },
        (error) => this.fail(error),
      )
      .finally(() => {
        this.inFlight = false;
        this.pump();
      });
  }

  private settleIdle(): void {
    if (this.busy) return;
    const waiters = this.idleWaiters.splice(0);
    for (const waiter of waiters) waiter();
  }
}
