// Keyboard mapping: held keys become incremental control messages at a
// fixed repeat rate. Four controlled degrees of freedom (x, y, z, yaw)
// plus a grip toggle; opposing keys cancel.

import { ControlMsg } from "./protocol.js";

export const BINDINGS: Record<string, keyof Deltas | "grip"> = {
  KeyD: "dxPlus",
  KeyA: "dxMinus",
  KeyW: "dyPlus",
  KeyS: "dyMinus",
  KeyR: "dzPlus",
  KeyF: "dzMinus",
  KeyE: "dyawPlus",
  KeyQ: "dyawMinus",
  Space: "grip",
};

interface Deltas {
  dxPlus: boolean;
  dxMinus: boolean;
  dyPlus: boolean;
  dyMinus: boolean;
  dzPlus: boolean;
  dzMinus: boolean;
  dyawPlus: boolean;
  dyawMinus: boolean;
}

export interface InputState {
  held: Set<string>;
  gripQueued: boolean;
  linearStep: number; // meters per control message
  yawStep: number;    // radians per control message
}

export function createInput(linearStep = 0.006, yawStep = 0.05): InputState {
  return { held: new Set(), gripQueued: false, linearStep, yawStep };
}

export function keyDown(input: InputState, code: string): void {
  const binding = BINDINGS[code];
  if (!binding) return;
  if (binding === "grip") {
    // edge-triggered: one toggle per press, not per repeat
    if (!input.held.has(code)) input.gripQueued = true;
  }
  input.held.add(code);
}

export function keyUp(input: InputState, code: string): void {
  input.held.delete(code);
}

function axis(input: InputState, plus: string, minus: string): number {
  return (input.held.has(plus) ? 1 : 0) - (input.held.has(minus) ? 1 : 0);
}

/**
 * Control message for one repeat interval, or null when idle.
 * Consumes any queued grip toggle.
 */
export function nextControl(input: InputState): ControlMsg | null {
  const dx = axis(input, "KeyD", "KeyA") * input.linearStep;
  const dy = axis(input, "KeyW", "KeyS") * input.linearStep;
  const dz = axis(input, "KeyR", "KeyF") * input.linearStep;
  const dyaw = axis(input, "KeyE", "KeyQ") * input.yawStep;
  const grip = input.gripQueued;
  input.gripQueued = false;
  if (dx === 0 && dy === 0 && dz === 0 && dyaw === 0 && !grip) return null;
  const msg: ControlMsg = { type: "control" };
  if (dx !== 0) msg.dx = dx;
  if (dy !== 0) msg.dy = dy;
  if (dz !== 0) msg.dz = dz;
  if (dyaw !== 0) msg.dyaw = dyaw;
  if (grip) msg.grip_toggle = true;
  return msg;
}
