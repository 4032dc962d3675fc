import { describe, expect, it } from "vitest";

import { StateMessage } from "../src/protocol.js";
import { hudScores, ingestFrame, newViewState } from "../src/view.js";

function stateFrame(t: number, w: number, wHat: number | null): StateMessage {
  return {
    type: "state",
    t,
    q: [1, 0, Math.PI],
    camera_heading: Math.PI,
    landmarks: [],
    w,
    w_hat: wHat,
    W: 4.5,
    h_min: { h1: w - 4.5, h6: null },
    v_ref: [0, 0, 0],
    v_star: [0, 0, 0],
    event: false,
  };
}

describe("ViewState", () => {
  it("reports no scores before the first frame", () => {
    const view = newViewState();
    expect(view.latest).toBeNull();
    expect(hudScores(view)).toBeNull();
  });

  it("shows exactly the newest broadcast values", () => {
    const view = newViewState();
    const first = stateFrame(0.1, 6, 5.5);
    const second = stateFrame(0.2, 7, 6.913);
    ingestFrame(view, { kind: "state", state: first });
    ingestFrame(view, { kind: "state", state: second });
    expect(view.latest).toBe(second);
    const hud = hudScores(view);
    expect(hud).not.toBeNull();
    // Identity with the frame fields, no client-side recomputation.
    expect(hud!.w).toBe(second.w);
    expect(hud!.wHat).toBe(second.w_hat);
    expect(hud!.threshold).toBe(second.W);
  });

  it("pushes one history sample per state frame, values verbatim", () => {
    const view = newViewState();
    ingestFrame(view, { kind: "state", state: stateFrame(0.1, 6, null) });
    ingestFrame(view, { kind: "state", state: stateFrame(0.2, 7, 6.5) });
    const samples = view.history.samples();
    expect(samples.length).toBe(2);
    expect(samples[0]).toMatchObject({ t: 0.1, w: 6, wHat: null });
    expect(samples[1]).toMatchObject({ t: 0.2, w: 7, wHat: 6.5 });
  });

  it("records server errors without touching the latest state", () => {
    const view = newViewState();
    ingestFrame(view, { kind: "state", state: stateFrame(0.1, 6, 6) });
    ingestFrame(view, { kind: "error", message: "expected type 'cmd'" });
    expect(view.lastError).toBe("expected type 'cmd'");
    expect(view.latest!.t).toBe(0.1);
    expect(view.history.length).toBe(1);
  });

  it("drops ignored frames silently", () => {
    const view = newViewState();
    ingestFrame(view, { kind: "ignored", detail: "not JSON" });
    expect(view.latest).toBeNull();
    expect(view.lastError).toBeNull();
  });
});
