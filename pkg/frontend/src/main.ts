// Entry point: fetch the scenario, open the state stream, run one render
// loop, and pace keyboard commands out at 20 Hz. All simulation and
// filtering happen server-side; this page is a pure protocol client.

import { STEERING_CODES, inputToCommand } from "./input.js";
import { CommandPacer } from "./pacing.js";
import { connectState, fetchScenario } from "./net.js";
import { ScenarioDoc } from "./protocol.js";
import { renderFrame } from "./render.js";
import { ingestFrame, newViewState } from "./view.js";

function serverBase(): string {
  const override = new URLSearchParams(window.location.search).get("server");
  if (override) {
    return override;
  }
  if (window.location.host) {
    return window.location.host;
  }
  // Opened from file://; assume the serve default.
  return "127.0.0.1:8700";
}

async function main(): Promise<void> {
  const canvas = document.getElementById("cockpit") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    throw new Error("2d canvas unsupported");
  }

  const base = serverBase();
  const secure = window.location.protocol === "https:";
  const httpBase = (secure ? "https://" : "http://") + base;
  const view = newViewState();

  let scenario: ScenarioDoc | null = null;
  try {
    scenario = await fetchScenario(httpBase);
  } catch (err) {
    console.warn("scenario fetch failed, retrying in background:", err);
    const retry = window.setInterval(() => {
      fetchScenario(httpBase).then((doc) => {
        scenario = doc;
        window.clearInterval(retry);
      }).catch(() => undefined);
    }, 3000);
  }

  const link = connectState((secure ? "wss://" : "ws://") + base + "/ws",
    (frame) => ingestFrame(view, frame),
    (up) => {
      view.connected = up;
    });

  window.addEventListener("keydown", (event) => {
    if (!STEERING_CODES.includes(event.code)) {
      return;
    }
    event.preventDefault();
    view.pressed.add(event.code);
  });
  window.addEventListener("keyup", (event) => {
    view.pressed.delete(event.code);
  });
  // Keys released while the tab is hidden never send their keyup.
  window.addEventListener("blur", () => {
    view.pressed.clear();
  });
  window.addEventListener("beforeunload", () => {
    link.close();
  });

  let clientSeq = 0;
  const pacer = new CommandPacer(50);
  window.setInterval(() => {
    if (scenario === null || !pacer.due(performance.now())) {
      return;
    }
    const cmd = inputToCommand(view.pressed, scenario.model.kind,
                               scenario.model.v_box, clientSeq);
    if (link.send(JSON.stringify(cmd))) {
      clientSeq += 1;
    }
  }, 50);

  function frame(): void {
    const width = canvas.clientWidth;
    const height = canvas.clientHeight;
    const ratio = window.devicePixelRatio || 1;
    const pxWidth = Math.round(width * ratio);
    const pxHeight = Math.round(height * ratio);
    if (canvas.width !== pxWidth || canvas.height !== pxHeight) {
      canvas.width = pxWidth;
      canvas.height = pxHeight;
    }
    ctx!.setTransform(ratio, 0, 0, ratio, 0, 0);
    renderFrame(ctx!, width, height, view, scenario);
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

window.addEventListener("load", () => {
  void main();
});
