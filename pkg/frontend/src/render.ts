// Orthographic dual-view scene rendering: a top-down (x, y) main view and a
// side (x, z) strip. Pure geometry helpers are separated from canvas calls
// so they can be unit-tested without a DOM.

import { SceneGeometry, StateMsg } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  // world-to-screen scale (pixels per meter) and world origin offset
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitViewport(scene: SceneGeometry, width: number,
                            height: number, margin = 20): Viewport {
  const [wx, wy] = [scene.workspace[0], scene.workspace[1]];
  const spanX = wx[1] - wx[0];
  const spanY = wy[1] - wy[0];
  const scale = Math.min((width - 2 * margin) / spanX,
                         (height - 2 * margin) / spanY);
  return {
    width,
    height,
    scale,
    offsetX: width / 2 - scale * (wx[0] + wx[1]) / 2,
    // canvas y grows downward; world y grows away from the viewer
    offsetY: height / 2 + scale * (wy[0] + wy[1]) / 2,
  };
}

export function worldToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + vp.scale * x, vp.offsetY - vp.scale * y];
}

export function yawOf(quat: number[]): number {
  const [qx, qy, qz, qw] = quat;
  return Math.atan2(2 * (qw * qz + qx * qy), 1 - 2 * (qy * qy + qz * qz));
}

/** Footprint corners of a yawed box, world coordinates. */
export function boxCorners(cx: number, cy: number, halfX: number,
                           halfY: number, yaw: number): [number, number][] {
  const c = Math.cos(yaw);
  const s = Math.sin(yaw);
  const local: [number, number][] = [
    [halfX, halfY], [halfX, -halfY], [-halfX, -halfY], [-halfX, halfY],
  ];
  return local.map(([u, v]) => [cx + c * u - s * v, cy + s * u + c * v]);
}

/** Push target rectangle: each dimension one margin wider than the box. */
export function targetRect(scene: SceneGeometry): {
  halfX: number; halfY: number; cx: number; cy: number; yaw: number;
} {
  return {
    halfX: (scene.box_size[0] + scene.target_margin) / 2,
    halfY: (scene.box_size[1] + scene.target_margin) / 2,
    cx: scene.target_center[0],
    cy: scene.target_center[1],
    yaw: scene.target_yaw,
  };
}

function polygon(ctx: CanvasRenderingContext2D, vp: Viewport,
                 pts: [number, number][], stroke: string, fill?: string): void {
  ctx.beginPath();
  pts.forEach(([x, y], i) => {
    const [sx, sy] = worldToScreen(vp, x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.closePath();
  if (fill) {
    ctx.fillStyle = fill;
    ctx.fill();
  }
  ctx.strokeStyle = stroke;
  ctx.stroke();
}

function rect(ctx: CanvasRenderingContext2D, vp: Viewport,
              xr: [number, number], yr: [number, number],
              stroke: string, fill?: string): void {
  polygon(ctx, vp, [[xr[0], yr[0]], [xr[1], yr[0]], [xr[1], yr[1]], [xr[0], yr[1]]],
          stroke, fill);
}

export function drawTopView(ctx: CanvasRenderingContext2D, vp: Viewport,
                            scene: SceneGeometry, state: StateMsg): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  rect(ctx, vp, scene.table_region[0] as [number, number],
       scene.table_region[1] as [number, number], "#888", "#f7f3ea");
  rect(ctx, vp, scene.shelf_region[0] as [number, number],
       scene.shelf_region[1] as [number, number], "#a06020", "#ecd9c0");

  if (scene.target_center) {
    const t = targetRect(scene);
    polygon(ctx, vp, boxCorners(t.cx, t.cy, t.halfX, t.halfY, t.yaw),
            "#2a9d2a");
  }

  const box = state.objects[0];
  const yaw = yawOf(box.slice(3, 7));
  const corners = boxCorners(box[0], box[1], scene.box_size[0] / 2,
                             scene.box_size[1] / 2, yaw);
  const carried = state.attached !== null;
  polygon(ctx, vp, corners, "#333", carried ? "#ffd27f" : "#e8a23c");
  // yaw arrow from the box center along its long axis
  const [bx, by] = worldToScreen(vp, box[0], box[1]);
  const [tx, ty] = worldToScreen(vp, box[0] + 0.05 * Math.cos(yaw),
                                 box[1] + 0.05 * Math.sin(yaw));
  ctx.beginPath();
  ctx.moveTo(bx, by);
  ctx.lineTo(tx, ty);
  ctx.strokeStyle = "#333";
  ctx.stroke();

  drawGripperGlyph(ctx, vp, state, state.gripper[0], state.gripper[1]);
}

export function drawSideView(ctx: CanvasRenderingContext2D, vp: Viewport,
                             scene: SceneGeometry, state: StateMsg): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  // table surface and the raised shelf, seen from the front (x-z plane)
  const [wx] = [scene.workspace[0]];
  const floor: [number, number][] = [[wx[0], 0], [wx[1], 0]];
  polygon(ctx, vp, floor, "#888");
  const sh = scene.shelf_region[0];
  polygon(ctx, vp, [[sh[0], scene.shelf_height], [sh[1], scene.shelf_height]],
          "#a06020");

  const box = state.objects[0];
  const hz = scene.box_size[2] / 2;
  rect(ctx, vp, [box[0] - scene.box_size[0] / 2, box[0] + scene.box_size[0] / 2],
       [box[2] - hz, box[2] + hz], "#333",
       state.attached !== null ? "#ffd27f" : "#e8a23c");
  drawGripperGlyph(ctx, vp, state, state.gripper[0], state.gripper[2]);
}

function drawGripperGlyph(ctx: CanvasRenderingContext2D, vp: Viewport,
                          state: StateMsg, wx: number, wy: number): void {
  const open = state.gripper[7] >= 0.5;
  const [gx, gy] = worldToScreen(vp, wx, wy);
  ctx.beginPath();
  ctx.arc(gx, gy, 6, 0, 2 * Math.PI);
  ctx.strokeStyle = state.recording ? "#c22" : "#226";
  if (open) {
    ctx.stroke(); // open: hollow ring
  } else {
    ctx.fillStyle = state.recording ? "#c22" : "#226";
    ctx.fill();   // closed: solid dot
  }
}
