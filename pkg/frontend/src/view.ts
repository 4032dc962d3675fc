// Client-side state of one teleop session: the newest server frame, the
// score history behind the strip chart, and the operator's pressed keys.

import { ServerFrame, StateMessage } from "./protocol.js";
import { ScoreHistory } from "./history.js";

export interface ViewState {
  latest: StateMessage | null;
  history: ScoreHistory;
  pressed: Set<string>;
  connected: boolean;
  lastError: string | null;
}

export function newViewState(): ViewState {
  return {
    latest: null,
    history: new ScoreHistory(),
    pressed: new Set(),
    connected: false,
    lastError: null,
  };
}

// Message ingestion appends here; the render loop only ever reads.
export function ingestFrame(view: ViewState, frame: ServerFrame): void {
  if (frame.kind === "error") {
    view.lastError = frame.message;
    return;
  }
  if (frame.kind !== "state") {
    return;
  }
  view.latest = frame.state;
  view.history.push({
    t: frame.state.t,
    w: frame.state.w,
    wHat: frame.state.w_hat,
    hMin: frame.state.h_min,
  });
}

export interface HudScores {
  w: number | null;
  wHat: number | null;
  threshold: number;
}

// Displayed scores come straight from the newest frame, never recomputed.
export function hudScores(view: ViewState): HudScores | null {
  if (view.latest === null) {
    return null;
  }
  return { w: view.latest.w, wHat: view.latest.w_hat, threshold: view.latest.W };
}
