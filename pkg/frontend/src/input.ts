// Keyboard to reference-velocity mapping.
//
// Arrows and WASD drive the planar channels; Q/E drive the third input,
// which is the heading rate for planar_cam_bot and the gimbal rate for
// diff_drive_gimbal. Full deflection lands on the input-box edge for that
// direction, so the operator can always command the whole polytope.

import { CommandMessage } from "./protocol.js";

const RIGHT = ["ArrowRight", "KeyD"];
const LEFT = ["ArrowLeft", "KeyA"];
const UP = ["ArrowUp", "KeyW"];
const DOWN = ["ArrowDown", "KeyS"];
const SPIN_POS = ["KeyQ"];
const SPIN_NEG = ["KeyE"];

export const STEERING_CODES: string[] = [
  ...RIGHT, ...LEFT, ...UP, ...DOWN, ...SPIN_POS, ...SPIN_NEG,
];

function axis(pressed: ReadonlySet<string>, pos: string[], neg: string[]): number {
  const p = pos.some((code) => pressed.has(code)) ? 1 : 0;
  const n = neg.some((code) => pressed.has(code)) ? 1 : 0;
  // Opposing keys cancel to 0.
  return p - n;
}

// The box may be asymmetric, so the two signs scale independently.
export function scaleToBox(a: number, interval: number[]): number {
  const clamped = Math.max(-1, Math.min(1, a));
  return clamped >= 0 ? clamped * interval[1] : -clamped * interval[0];
}

// Per-channel deflections in [-1, 1] in the model's input order.
export function inputAxes(pressed: ReadonlySet<string>, modelKind: string): number[] {
  const spin = axis(pressed, SPIN_POS, SPIN_NEG);
  if (modelKind === "diff_drive_gimbal") {
    // (forward speed, base yaw rate, gimbal rate); left turn is positive yaw.
    return [axis(pressed, UP, DOWN), axis(pressed, LEFT, RIGHT), spin];
  }
  // planar_cam_bot: (vx, vy, heading rate) directly in the world frame.
  return [axis(pressed, RIGHT, LEFT), axis(pressed, UP, DOWN), spin];
}

export function inputToCommand(pressed: ReadonlySet<string>, modelKind: string,
                               vBox: number[][], clientSeq: number): CommandMessage {
  const axes = inputAxes(pressed, modelKind);
  const vRef = vBox.map((interval, i) => scaleToBox(axes[i] ?? 0, interval));
  return { type: "cmd", v_ref: vRef, client_seq: clientSeq };
}
