// Websocket session: feeds server messages into the store and sends
// control/recording messages. The UI never mutates the world directly;
// every effect flows through a message to the server.

import { ClientMsg, encodeClientMsg, parseServerMsg } from "./protocol.js";
import { SessionView, pushState } from "./store.js";

export interface Session {
  view: SessionView;
  send: (msg: ClientMsg) => boolean;
  close: () => void;
}

export function connectSession(view: SessionView, url: string,
                               socketFactory?: (url: string) => WebSocket): Session {
  const ws = (socketFactory ?? ((u: string) => new WebSocket(u)))(url);

  ws.onopen = () => {
    view.connected = true;
  };
  ws.onclose = () => {
    view.connected = false;
  };
  ws.onerror = () => {
    view.lastError = "connection error";
  };
  ws.onmessage = (ev: MessageEvent) => {
    const msg = parseServerMsg(String(ev.data));
    if (msg === null) {
      view.lastError = "malformed message from server";
      return;
    }
    switch (msg.type) {
      case "hello":
        view.hello = msg;
        break;
      case "state":
        pushState(view, msg);
        break;
      case "saved":
        view.lastSavedId = msg.raw_id;
        view.demoCount += 1;
        break;
      case "error":
        view.lastError = msg.message;
        break;
    }
  };

  return {
    view,
    send(msg: ClientMsg): boolean {
      if (ws.readyState !== 1 /* OPEN */) return false;
      ws.send(encodeClientMsg(msg));
      return true;
    },
    close() {
      ws.close();
    },
  };
}
