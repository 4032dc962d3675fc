// Server connection: scenario fetch plus a WebSocket state stream with
// capped-backoff reconnect.

import { ScenarioDoc, ServerFrame, decodeServerFrame } from "./protocol.js";

export interface ServerLink {
  send(text: string): boolean;
  close(): void;
}

export function connectState(url: string, onFrame: (frame: ServerFrame) => void,
                             onStatus: (connected: boolean) => void): ServerLink {
  let ws: WebSocket | null = null;
  let stopped = false;
  let retryMs = 500;

  function open(): void {
    ws = new WebSocket(url);
    ws.addEventListener("open", () => {
      retryMs = 500;
      onStatus(true);
    });
    ws.addEventListener("message", (event) => {
      // The server only ever sends text frames.
      if (typeof event.data !== "string") {
        return;
      }
      onFrame(decodeServerFrame(event.data));
    });
    ws.addEventListener("close", () => {
      onStatus(false);
      if (stopped) {
        return;
      }
      setTimeout(open, retryMs);
      retryMs = Math.min(retryMs * 2, 5000);
    });
    ws.addEventListener("error", () => {
      ws?.close();
    });
  }
  open();

  return {
    send(text: string): boolean {
      if (ws === null || ws.readyState !== WebSocket.OPEN) {
        return false;
      }
      ws.send(text);
      return true;
    },
    close(): void {
      stopped = true;
      ws?.close();
    },
  };
}

export async function fetchScenario(baseUrl: string): Promise<ScenarioDoc> {
  const res = await fetch(baseUrl + "/scenario");
  if (!res.ok) {
    throw new Error("GET /scenario failed: " + String(res.status));
  }
  return await res.json() as ScenarioDoc;
}
