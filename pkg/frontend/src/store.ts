// Latest-state-wins store decoupling the message stream from rendering.
// Incoming states overwrite the previous one, so the renderer always draws
// the freshest world and a slow frame can never build a message backlog.

import { HelloMsg, StateMsg } from "./protocol.js";

export interface SessionView {
  hello: HelloMsg | null;
  state: StateMsg | null;
  fresh: boolean;     // current state not yet rendered
  connected: boolean;
  recording: boolean;
  demoCount: number;
  lastSavedId: string | null;
  lastError: string | null;
  received: number;   // state messages accepted
  dropped: number;    // states overwritten before ever being rendered
}

export function createStore(): SessionView {
  return {
    hello: null,
    state: null,
    fresh: false,
    connected: false,
    recording: false,
    demoCount: 0,
    lastSavedId: null,
    lastError: null,
    received: 0,
    dropped: 0,
  };
}

export function pushState(view: SessionView, msg: StateMsg): void {
  if (view.fresh) view.dropped += 1;
  view.state = msg;
  view.recording = msg.recording;
  view.received += 1;
  view.fresh = true;
}

/** Called by the render loop; marks the current state as consumed. */
export function takeState(view: SessionView): StateMsg | null {
  view.fresh = false;
  return view.state;
}

/** Number of unrendered states; by construction never exceeds one. */
export function backlog(view: SessionView): number {
  return view.fresh ? 1 : 0;
}
