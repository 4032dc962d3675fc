// Canvas cockpit: top-down world view above a 30 s score strip chart.
// Everything physical shown here comes out of the latest server frame;
// this file only draws, it never recomputes scores or constraints.

import { LandmarkView, ScenarioDoc, StateMessage } from "./protocol.js";
import { ScoreSample } from "./history.js";
import { ViewState, hudScores } from "./view.js";

export const REF_ARROW_COLOR = "#ffa94d";
export const STAR_ARROW_COLOR = "#4dabf7";

const BG = "#11151a";
const FRAME = "#2b3440";
const TEXT = "#aab4c0";
const DIM_TEXT = "#5c6773";
const FOV_FILL = "rgba(102, 187, 106, 0.18)";
const FOV_EDGE = "rgba(102, 187, 106, 0.45)";
const ROBOT = "#e0e6ed";
const CAMERA = "#66bb6a";
const ACTIVE_LM = "#4caf50";
const VISIBLE_LM = "#90a4ae";
const HIDDEN_LM = "#78909c";
const OBSTACLE = "#455a64";
const WALL = "#8d6e63";
const W_LINE = "#ff6b6b";
const W_SERIES = "#4dabf7";
const WHAT_SERIES = "#69db7c";
const ERROR_TEXT = "#ff8787";

const CHART_FRACTION = 0.28;

export interface Viewport {
  originX: number;
  originY: number;
  scale: number;
}

// Uniform world-to-screen fit with the y axis pointing up on screen.
export function fitViewport(bounds: number[][], width: number, height: number,
                            padPx = 16): Viewport {
  const spanX = Math.max(bounds[0][1] - bounds[0][0], 1e-6);
  const spanY = Math.max(bounds[1][1] - bounds[1][0], 1e-6);
  const scale = Math.min((width - 2 * padPx) / spanX, (height - 2 * padPx) / spanY);
  const cx = (bounds[0][0] + bounds[0][1]) / 2;
  const cy = (bounds[1][0] + bounds[1][1]) / 2;
  return { originX: width / 2 - scale * cx, originY: height / 2 + scale * cy, scale };
}

export function toScreen(vp: Viewport, wx: number, wy: number): [number, number] {
  return [vp.originX + vp.scale * wx, vp.originY - vp.scale * wy];
}

// Scenario bounds when present, otherwise a box around what the frame shows.
export function worldBounds(scenario: ScenarioDoc | null, state: StateMessage): number[][] {
  if (scenario !== null && scenario.world.bounds !== null) {
    return scenario.world.bounds;
  }
  const xs = [state.q[0]];
  const ys = [state.q[1]];
  for (const lm of state.landmarks) {
    xs.push(lm.p[0]);
    ys.push(lm.p[1]);
  }
  const pad = 0.5;
  return [
    [Math.min(...xs) - pad, Math.max(...xs) + pad],
    [Math.min(...ys) - pad, Math.max(...ys) + pad],
  ];
}

export interface Wedge {
  halfAngle: number;
  rNear: number;
  rFar: number;
}

// Top-down footprint of the sensing region.
export function fovWedge(visibility: ScenarioDoc["visibility"]): Wedge {
  if (visibility.kind === "stereo_frustum") {
    const fx = visibility.fx ?? 300;
    const halfWidth = (visibility.image_width ?? 640) / 2;
    return {
      halfAngle: Math.atan(halfWidth / fx),
      rNear: visibility.range_min ?? 0.3,
      rFar: visibility.range_max ?? 5,
    };
  }
  return {
    halfAngle: (visibility.angle_of_view ?? 1) / 2,
    rNear: 0,
    rFar: visibility.sensing_range ?? 1,
  };
}

// World-frame translational velocity for the arrow overlays. The diff-drive
// base can only translate along its heading.
export function planarVelocity(modelKind: string, q: number[], v: number[]): [number, number] {
  if (modelKind === "diff_drive_gimbal") {
    return [v[0] * Math.cos(q[2]), v[0] * Math.sin(q[2])];
  }
  return [v[0], v[1]];
}

export interface GlyphStyle {
  filled: boolean;
  alpha: number;
  color: string;
}

// Visibility picks filled vs hollow; an active landmark fades with lambda.
export function glyphStyle(lm: LandmarkView): GlyphStyle {
  const lam = lm.lam === null ? 1 : Math.min(1, Math.max(0, lm.lam));
  return {
    filled: lm.visible,
    alpha: lm.active ? 0.15 + 0.85 * lam : 1.0,
    color: lm.active ? ACTIVE_LM : lm.visible ? VISIBLE_LM : HIDDEN_LM,
  };
}

// Family with the smallest margin among those the frame reports.
export function bindingFamily(hMin: Record<string, number | null>): [string, number] | null {
  let best: [string, number] | null = null;
  for (const family of Object.keys(hMin)) {
    const value = hMin[family];
    if (value === null || value === undefined) {
      continue;
    }
    if (best === null || value < best[1]) {
      best = [family, value];
    }
  }
  return best;
}

export function fmtScore(value: number | null): string {
  return value === null ? "n/a" : value.toFixed(2);
}

function drawArrow(ctx: CanvasRenderingContext2D,
                   x0: number, y0: number, x1: number, y1: number): void {
  const dx = x1 - x0;
  const dy = y1 - y0;
  const len = Math.hypot(dx, dy);
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
  if (len < 4) {
    return;
  }
  const ux = dx / len;
  const uy = dy / len;
  const head = Math.min(7, len / 2);
  ctx.beginPath();
  ctx.moveTo(x1, y1);
  ctx.lineTo(x1 - head * (ux * 0.866 - uy * 0.5), y1 - head * (uy * 0.866 + ux * 0.5));
  ctx.moveTo(x1, y1);
  ctx.lineTo(x1 - head * (ux * 0.866 + uy * 0.5), y1 - head * (uy * 0.866 - ux * 0.5));
  ctx.stroke();
}

function wedgePath(ctx: CanvasRenderingContext2D, vp: Viewport,
                   cx: number, cy: number, heading: number, wedge: Wedge): void {
  const n = 24;
  const a0 = heading - wedge.halfAngle;
  const a1 = heading + wedge.halfAngle;
  ctx.beginPath();
  for (let i = 0; i <= n; i++) {
    const a = a0 + ((a1 - a0) * i) / n;
    const [sx, sy] = toScreen(vp, cx + wedge.rFar * Math.cos(a), cy + wedge.rFar * Math.sin(a));
    if (i === 0) {
      ctx.moveTo(sx, sy);
    } else {
      ctx.lineTo(sx, sy);
    }
  }
  // Inner arc walked backwards; collapses to the apex when rNear is 0.
  for (let i = n; i >= 0; i--) {
    const a = a0 + ((a1 - a0) * i) / n;
    const [sx, sy] = toScreen(vp, cx + wedge.rNear * Math.cos(a), cy + wedge.rNear * Math.sin(a));
    ctx.lineTo(sx, sy);
  }
  ctx.closePath();
}

function drawWorld(ctx: CanvasRenderingContext2D, width: number, height: number,
                   state: StateMessage, scenario: ScenarioDoc | null): void {
  const bounds = worldBounds(scenario, state);
  const vp = fitViewport(bounds, width, height);

  ctx.globalAlpha = 1;
  ctx.lineWidth = 1;
  ctx.strokeStyle = FRAME;
  const [bx0, by0] = toScreen(vp, bounds[0][0], bounds[1][1]);
  const [bx1, by1] = toScreen(vp, bounds[0][1], bounds[1][0]);
  ctx.strokeRect(bx0, by0, bx1 - bx0, by1 - by0);

  if (scenario !== null) {
    for (const ob of scenario.world.obstacles) {
      if (ob.kind === "disc" && ob.center && ob.radius) {
        const [ox, oy] = toScreen(vp, ob.center[0], ob.center[1]);
        ctx.beginPath();
        ctx.arc(ox, oy, ob.radius * vp.scale, 0, 2 * Math.PI);
        ctx.fillStyle = OBSTACLE;
        ctx.fill();
      } else if (ob.kind === "segment" && ob.start && ob.end) {
        const [ax, ay] = toScreen(vp, ob.start[0], ob.start[1]);
        const [ex, ey] = toScreen(vp, ob.end[0], ob.end[1]);
        ctx.strokeStyle = OBSTACLE;
        ctx.lineWidth = Math.max(2, (ob.thickness ?? 0) * vp.scale);
        ctx.beginPath();
        ctx.moveTo(ax, ay);
        ctx.lineTo(ex, ey);
        ctx.stroke();
      }
    }
    for (const wall of scenario.world.walls) {
      const [ax, ay] = toScreen(vp, wall.start[0], wall.start[1]);
      const [ex, ey] = toScreen(vp, wall.end[0], wall.end[1]);
      ctx.strokeStyle = WALL;
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(ex, ey);
      ctx.stroke();
    }
  }

  if (scenario !== null) {
    wedgePath(ctx, vp, state.q[0], state.q[1], state.camera_heading,
              fovWedge(scenario.visibility));
    ctx.fillStyle = FOV_FILL;
    ctx.fill();
    ctx.strokeStyle = FOV_EDGE;
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  for (const lm of state.landmarks) {
    const [sx, sy] = toScreen(vp, lm.p[0], lm.p[1]);
    const style = glyphStyle(lm);
    ctx.beginPath();
    ctx.arc(sx, sy, 4, 0, 2 * Math.PI);
    ctx.globalAlpha = style.alpha;
    if (style.filled) {
      ctx.fillStyle = style.color;
      ctx.fill();
    } else {
      ctx.strokeStyle = style.color;
      ctx.lineWidth = 1.4;
      ctx.stroke();
    }
  }
  ctx.globalAlpha = 1;

  const [rx, ry] = toScreen(vp, state.q[0], state.q[1]);
  // Base heading tick; coincides with the camera ray on the planar model.
  if (state.q.length > 2) {
    ctx.strokeStyle = ROBOT;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(rx, ry);
    ctx.lineTo(rx + 12 * Math.cos(state.q[2]), ry - 12 * Math.sin(state.q[2]));
    ctx.stroke();
  }
  ctx.strokeStyle = CAMERA;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(rx, ry);
  ctx.lineTo(rx + 18 * Math.cos(state.camera_heading),
             ry - 18 * Math.sin(state.camera_heading));
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(rx, ry, 6, 0, 2 * Math.PI);
  ctx.fillStyle = ROBOT;
  ctx.fill();

  // Commanded vs filtered velocity, drawn in the world frame.
  const kind = scenario === null ? "planar_cam_bot" : scenario.model.kind;
  const arrowScale = 0.45 * vp.scale;
  const [vrx, vry] = planarVelocity(kind, state.q, state.v_ref);
  const [vsx, vsy] = planarVelocity(kind, state.q, state.v_star);
  ctx.lineWidth = 2;
  ctx.strokeStyle = REF_ARROW_COLOR;
  ctx.setLineDash([5, 4]);
  drawArrow(ctx, rx, ry, rx + arrowScale * vrx, ry - arrowScale * vry);
  ctx.setLineDash([]);
  ctx.strokeStyle = STAR_ARROW_COLOR;
  drawArrow(ctx, rx, ry, rx + arrowScale * vsx, ry - arrowScale * vsy);
}

function drawSeries(ctx: CanvasRenderingContext2D, samples: ScoreSample[],
                    pick: (s: ScoreSample) => number | null,
                    sx: (t: number) => number, sy: (v: number) => number,
                    color: string, dash: number[]): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.6;
  ctx.setLineDash(dash);
  ctx.beginPath();
  let pen = false;
  for (const s of samples) {
    const v = pick(s);
    if (v === null) {
      pen = false;
      continue;
    }
    if (pen) {
      ctx.lineTo(sx(s.t), sy(v));
    } else {
      ctx.moveTo(sx(s.t), sy(v));
      pen = true;
    }
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawChart(ctx: CanvasRenderingContext2D, x: number, y: number,
                   width: number, height: number, view: ViewState,
                   state: StateMessage): void {
  ctx.strokeStyle = FRAME;
  ctx.lineWidth = 1;
  ctx.strokeRect(x + 0.5, y + 0.5, width - 1, height - 1);

  const samples = view.history.samples();
  const threshold = state.W;
  const padLeft = 48;
  const padRight = 10;
  const padTop = 8;
  const padBottom = 14;
  const plotX = x + padLeft;
  const plotW = width - padLeft - padRight;
  const plotY = y + padTop;
  const plotH = height - padTop - padBottom;

  const tEnd = samples.length > 0 ? samples[samples.length - 1].t : state.t;
  const tStart = tEnd - view.history.windowSeconds;
  let yMax = threshold;
  for (const s of samples) {
    if (s.w !== null) {
      yMax = Math.max(yMax, s.w);
    }
    if (s.wHat !== null) {
      yMax = Math.max(yMax, s.wHat);
    }
  }
  yMax = yMax > 0 ? yMax * 1.1 : 1;
  const sx = (t: number) => plotX + ((t - tStart) / (tEnd - tStart || 1)) * plotW;
  const sy = (v: number) => plotY + plotH - (v / yMax) * plotH;

  ctx.strokeStyle = W_LINE;
  ctx.lineWidth = 1;
  ctx.setLineDash([2, 3]);
  ctx.beginPath();
  ctx.moveTo(plotX, sy(threshold));
  ctx.lineTo(plotX + plotW, sy(threshold));
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.font = "11px ui-monospace, monospace";
  ctx.textAlign = "right";
  ctx.fillStyle = W_LINE;
  ctx.fillText("W=" + String(threshold), plotX - 4, sy(threshold) + 4);

  drawSeries(ctx, samples, (s) => s.w, sx, sy, W_SERIES, []);
  drawSeries(ctx, samples, (s) => s.wHat, sx, sy, WHAT_SERIES, [6, 3]);

  ctx.textAlign = "left";
  ctx.fillStyle = W_SERIES;
  ctx.fillText("w", plotX + 6, plotY + 10);
  ctx.fillStyle = WHAT_SERIES;
  ctx.fillText("ŵ", plotX + 20, plotY + 10);
}

function drawHud(ctx: CanvasRenderingContext2D, width: number, worldHeight: number,
                 view: ViewState, scenario: ScenarioDoc | null,
                 state: StateMessage): void {
  const hud = hudScores(view);
  if (hud === null) {
    return;
  }
  ctx.font = "13px ui-monospace, monospace";
  ctx.textAlign = "left";
  ctx.fillStyle = TEXT;
  const name = scenario === null ? "scenario" : scenario.name;
  const link = view.connected ? "live" : "disconnected";
  ctx.fillText(name + "  t=" + state.t.toFixed(2) + "s  " + link, 10, 18);
  ctx.fillText("w=" + fmtScore(hud.w) + "  ŵ=" + fmtScore(hud.wHat)
               + "  W=" + fmtScore(hud.threshold), 10, 36);
  const binding = bindingFamily(state.h_min);
  if (binding !== null) {
    ctx.fillStyle = DIM_TEXT;
    ctx.fillText("tightest " + binding[0] + "=" + binding[1].toFixed(3), 10, 54);
  }
  if (state.event) {
    ctx.fillStyle = CAMERA;
    ctx.fillText("camera event", 10, 72);
  }
  ctx.textAlign = "right";
  ctx.fillStyle = DIM_TEXT;
  ctx.font = "12px system-ui, sans-serif";
  ctx.fillText("arrows/WASD move, Q/E turn the camera", width - 10, 18);
  if (view.lastError !== null) {
    ctx.textAlign = "left";
    ctx.fillStyle = ERROR_TEXT;
    ctx.font = "12px ui-monospace, monospace";
    ctx.fillText("server: " + view.lastError, 10, worldHeight - 10);
  }
}

export function renderFrame(ctx: CanvasRenderingContext2D, width: number,
                            height: number, view: ViewState,
                            scenario: ScenarioDoc | null): void {
  ctx.setLineDash([]);
  ctx.globalAlpha = 1;
  ctx.fillStyle = BG;
  ctx.fillRect(0, 0, width, height);

  const chartH = Math.round(height * CHART_FRACTION);
  const worldH = height - chartH;

  if (view.latest === null) {
    ctx.fillStyle = TEXT;
    ctx.font = "16px system-ui, sans-serif";
    ctx.textAlign = "center";
    const note = view.connected ? "waiting for state frames" : "waiting for connection";
    ctx.fillText(note, width / 2, height / 2);
    ctx.fillStyle = DIM_TEXT;
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText("arrows/WASD move, Q/E turn the camera", width / 2, height / 2 + 22);
    return;
  }

  drawWorld(ctx, width, worldH, view.latest, scenario);
  drawChart(ctx, 0, worldH, width, chartH, view, view.latest);
  drawHud(ctx, width, worldH, view, scenario, view.latest);
}
