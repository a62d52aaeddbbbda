import { describe, expect, it } from "vitest";

import { StateMsg } from "../src/protocol.js";
import { backlog, createStore, pushState, takeState } from "../src/store.js";

function stateAt(tick: number): StateMsg {
  return {
    type: "state",
    tick,
    objects: [[0, 0, 0.035, 0, 0, 0, 1]],
    gripper: [0, 0, 0.2, 0, 0, 0, 1, 1],
    attached: null,
    recording: tick % 2 === 0,
  };
}

describe("latest-state-wins store", () => {
  it("renderer always sees the newest state", () => {
    const view = createStore();
    pushState(view, stateAt(1));
    pushState(view, stateAt(2));
    pushState(view, stateAt(3));
    expect(takeState(view)!.tick).toBe(3);
  });

  it("backlog never exceeds one message", () => {
    const view = createStore();
    for (let i = 0; i < 1000; i++) {
      pushState(view, stateAt(i));
      expect(backlog(view)).toBe(1);
    }
    takeState(view);
    expect(backlog(view)).toBe(0);
  });

  it("sustains a five-minute stream without accumulation", () => {
    // 5 minutes of states at the recording rate, pushed as fast as possible,
    // with a renderer that keeps up only every third message
    const view = createStore();
    const messages = 5 * 60 * 33;
    const start = performance.now();
    for (let i = 0; i < messages; i++) {
      pushState(view, stateAt(i));
      if (i % 3 === 0) takeState(view);
    }
    const elapsed = (performance.now() - start) / 1000;
    expect(view.received).toBe(messages);
    expect(backlog(view)).toBeLessThanOrEqual(1);
    // processing runs far faster than the stream arrives
    expect(elapsed).toBeLessThan(60);
    const throughput = messages / Math.max(elapsed, 1e-9);
    expect(throughput).toBeGreaterThan(33);
  });

  it("counts states dropped between renders", () => {
    const view = createStore();
    pushState(view, stateAt(1));
    pushState(view, stateAt(2)); // overwrote an unrendered state
    takeState(view);
    expect(view.dropped).toBe(1);
    expect(view.received).toBe(2);
  });
});
