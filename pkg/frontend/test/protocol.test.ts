import { describe, expect, it } from "vitest";

import { encodeClientMsg, parseServerMsg, StateMsg } from "../src/protocol.js";

const stateJson = JSON.stringify({
  type: "state",
  tick: 12,
  objects: [[0.1, -0.2, 0.035, 0, 0, 0, 1]],
  gripper: [0, 0, 0.2, 0, 0, 0, 1, 1],
  attached: null,
  recording: false,
});

describe("parseServerMsg", () => {
  it("accepts well-formed state messages", () => {
    const msg = parseServerMsg(stateJson) as StateMsg;
    expect(msg).not.toBeNull();
    expect(msg.type).toBe("state");
    expect(msg.gripper).toHaveLength(8);
  });

  it("rejects malformed json without throwing", () => {
    expect(parseServerMsg("{nope")).toBeNull();
    expect(parseServerMsg("42")).toBeNull();
    expect(parseServerMsg('{"type":"wat"}')).toBeNull();
  });

  it("rejects state messages with a bad gripper vector", () => {
    const bad = JSON.parse(stateJson);
    bad.gripper = [1, 2, 3];
    expect(parseServerMsg(JSON.stringify(bad))).toBeNull();
  });

  it("round-trips float values exactly", () => {
    const value = 0.1 + 0.2; // 0.30000000000000004
    const raw = JSON.stringify({
      type: "state", tick: 0, objects: [[value, 0, 0, 0, 0, 0, 1]],
      gripper: [value, 0, 0, 0, 0, 0, 1, 0], attached: null, recording: false,
    });
    const msg = parseServerMsg(raw) as StateMsg;
    expect(msg.gripper[0]).toBe(value);
  });
});

describe("encodeClientMsg", () => {
  it("produces single-line records with a type field", () => {
    const line = encodeClientMsg({ type: "control", dx: 0.01, grip_toggle: true });
    expect(line).not.toContain("\n");
    const parsed = JSON.parse(line);
    expect(parsed.type).toBe("control");
    expect(parsed.dx).toBeCloseTo(0.01, 12);
    expect(parsed.grip_toggle).toBe(true);
  });

  it("encodes recording control messages", () => {
    expect(JSON.parse(encodeClientMsg({ type: "begin_demo" })).type).toBe("begin_demo");
    const end = JSON.parse(encodeClientMsg({ type: "end_demo", outcome: "failure" }));
    expect(end.outcome).toBe("failure");
  });
});
