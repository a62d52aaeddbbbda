// Wire protocol with the demonstration-collection service: single-line JSON
// records, each carrying a "type" field. Numbers round-trip exactly
// (shortest-decimal encoding on both sides).

export interface SceneGeometry {
  box_size: [number, number, number];
  workspace: [number, number][];
  table_region: [number, number][];
  shelf_region: [number, number][];
  shelf_height: number;
  target_center: [number, number];
  target_yaw: number;
  target_margin: number;
  tick_hz: number;
}

export interface HelloMsg {
  type: "hello";
  task: "pick-place" | "push";
  role: "pilot" | "spectator";
  scene: SceneGeometry;
}

export interface StateMsg {
  type: "state";
  tick: number;
  objects: number[][]; // one 7-value pose per object
  gripper: number[];   // 7-value pose + open flag
  attached: number | null;
  recording: boolean;
}

export interface SavedMsg {
  type: "saved";
  raw_id: string;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = HelloMsg | StateMsg | SavedMsg | ErrorMsg;

export interface ControlMsg {
  type: "control";
  dx?: number;
  dy?: number;
  dz?: number;
  dyaw?: number;
  grip_toggle?: boolean;
}

export type ClientMsg =
  | ControlMsg
  | { type: "begin_demo" }
  | { type: "end_demo"; outcome: "success" | "failure" };

const SERVER_TYPES = new Set(["hello", "state", "saved", "error"]);

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  const msg = data as ServerMsg;
  if (msg.type === "state") {
    if (!Array.isArray(msg.objects) || !Array.isArray(msg.gripper) ||
        msg.gripper.length !== 8) {
      return null;
    }
  }
  return msg;
}

export function encodeClientMsg(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
