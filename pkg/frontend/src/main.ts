// Entry point: wires the websocket session, keyboard input and the two
// canvas views together. Keys: WASD planar, R/F vertical, Q/E yaw,
// Space grip, B begin recording, Enter end (success), X end (failure).

import { createInput, keyDown, keyUp, nextControl } from "./input.js";
import { drawSideView, drawTopView, fitViewport } from "./render.js";
import { connectSession } from "./session.js";
import { backlog, createStore, takeState } from "./store.js";

const CONTROL_HZ = 30;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function start(): void {
  const topCanvas = el<HTMLCanvasElement>("top-view");
  const sideCanvas = el<HTMLCanvasElement>("side-view");
  const status = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");

  const view = createStore();
  const url = `ws://${location.host}/ws`;
  const session = connectSession(view, url);
  const input = createInput();

  window.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    if (ev.code === "KeyB") {
      session.send({ type: "begin_demo" });
    } else if (ev.code === "Enter") {
      session.send({ type: "end_demo", outcome: "success" });
    } else if (ev.code === "KeyX") {
      session.send({ type: "end_demo", outcome: "failure" });
    } else {
      keyDown(input, ev.code);
    }
  });
  window.addEventListener("keyup", (ev) => keyUp(input, ev.code));

  setInterval(() => {
    if (!view.connected) return; // input while disconnected is ignored
    const msg = nextControl(input);
    if (msg) session.send(msg);
  }, 1000 / CONTROL_HZ);

  const render = () => {
    const state = takeState(view);
    if (view.hello && state) {
      const scene = view.hello.scene;
      const topVp = fitViewport(scene, topCanvas.width, topCanvas.height);
      drawTopView(topCanvas.getContext("2d")!, topVp, scene, state);
      const sideVp = fitViewport(scene, sideCanvas.width, sideCanvas.height);
      drawSideView(sideCanvas.getContext("2d")!, sideVp, scene, state);
    }
    status.textContent = [
      view.connected ? "connected" : "disconnected",
      view.hello ? `task ${view.hello.task} (${view.hello.role})` : "",
      view.recording ? "RECORDING" : "idle",
      `demos saved: ${view.demoCount}`,
      view.lastSavedId ? `last: ${view.lastSavedId}` : "",
      `backlog: ${backlog(view)}`,
    ].filter(Boolean).join("  |  ");
    banner.textContent = view.lastError ?? "";
    banner.style.display = view.lastError ? "block" : "none";
    requestAnimationFrame(render);
  };
  requestAnimationFrame(render);
}

window.addEventListener("DOMContentLoaded", start);
