import { afterEach, describe, expect, test, vi } from "vitest";

import type { WhatIfResponse } from "../src/types.js";
import { WhatIfQueue } from "../src/whatifQueue.js";

function response(delta: number): WhatIfResponse {
  return {
    level_id: "L1",
    delta,
    baseline: 0.5,
    predicted: 0.5 + delta / 100,
    change: delta / 100,
    corrected: false,
    assumes_fixed_params: true,
  };
}

afterEach(() => {
  vi.useRealTimers();
});

describe("WhatIfQueue", () => {
  test("debounces rapid requests into a single call for the last delta", async () => {
    vi.useFakeTimers();
    const sent: number[] = [];
    const applied: number[] = [];
    const queue = new WhatIfQueue(
      async (delta) => {
        sent.push(delta);
        return response(delta);
      },
      (r) => applied.push(r.delta),
    );
    queue.request(1);
    queue.request(2);
    queue.request(3);
    await vi.advanceTimersByTimeAsync(119);
    expect(sent).toEqual([]);
    await vi.advanceTimersByTimeAsync(5);
    expect(sent).toEqual([3]);
    expect(applied).toEqual([3]);
    expect(queue.busy).toBe(false);
  });

  test("keeps at most one request in flight", async () => {
    vi.useFakeTimers();
    const resolvers: Array<(r: WhatIfResponse) => void> = [];
    const sent: number[] = [];
    const applied: number[] = [];
    const queue = new WhatIfQueue(
      (delta) => {
        sent.push(delta);
        return new Promise<WhatIfResponse>((resolve) => resolvers.push(resolve));
      },
      (r) => applied.push(r.delta),
    );
    queue.request(1);
    await vi.advanceTimersByTimeAsync(125);
    expect(sent).toEqual([1]);

    // new requests while one is outstanding only queue the latest delta
    queue.request(2);
    await vi.advanceTimersByTimeAsync(125);
    queue.request(4);
    await vi.advanceTimersByTimeAsync(125);
    expect(sent).toEqual([1]);

    resolvers[0](response(1));
    await vi.advanceTimersByTimeAsync(1);
    expect(sent).toEqual([1, 4]);
    resolvers[1](response(4));
    await vi.advanceTimersByTimeAsync(1);
    expect(applied).toEqual([1, 4]);
    expect(queue.busy).toBe(false);
  });

  test("reports failures without wedging the queue", async () => {
    vi.useFakeTimers();
    const failures: unknown[] = [];
    const applied: number[] = [];
    let shouldFail = true;
    const queue = new WhatIfQueue(
      async (delta) => {
        if (shouldFail) throw new Error("boom");
        return response(delta);
      },
      (r) => applied.push(r.delta),
      (error) => failures.push(error),
    );
    queue.request(1);
    await vi.advanceTimersByTimeAsync(150);
    expect(failures).toHaveLength(1);
    expect(applied).toEqual([]);

    shouldFail = false;
    queue.request(2);
    await vi.advanceTimersByTimeAsync(150);
    expect(applied).toEqual([2]);
  });

  test("idle resolves immediately when nothing is pending", async () => {
    const queue = new WhatIfQueue(
      async (delta) => response(delta),
      () => {},
    );
    await expect(queue.idle()).resolves.toBeUndefined();
  });

  test("idle waits for the pipeline to drain", async () => {
    const applied: number[] = [];
    const queue = new WhatIfQueue(
      async (delta) => response(delta),
      (r) => applied.push(r.delta),
      () => {},
      5,
    );
    queue.request(7);
    queue.request(9);
    await queue.idle();
    expect(applied).toEqual([9]);
  });
});
