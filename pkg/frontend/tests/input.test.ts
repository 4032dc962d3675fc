import { describe, expect, it } from "vitest";

import { inputToCommand, scaleToBox } from "../src/input.js";

// Input boxes of the two bundled models.
const PLANAR_BOX = [[-2, 2], [-2, 2], [-1, 1]];
const DIFF_BOX = [[-0.3, 0.3], [-1, 1], [-2, 2]];

function keys(...codes: string[]): Set<string> {
  return new Set(codes);
}

describe("scaleToBox", () => {
  it("lands full deflection on the box edge for each sign", () => {
    expect(scaleToBox(1, [-2, 2])).toBe(2);
    expect(scaleToBox(-1, [-2, 2])).toBe(-2);
    expect(scaleToBox(0.5, [-2, 2])).toBe(1);
  });

  it("handles an asymmetric interval", () => {
    expect(scaleToBox(1, [-0.5, 2])).toBe(2);
    expect(scaleToBox(-1, [-0.5, 2])).toBe(-0.5);
  });

  it("clamps runaway deflections", () => {
    expect(scaleToBox(3, [-1, 1])).toBe(1);
    expect(scaleToBox(-7, [-1, 1])).toBe(-1);
  });
});

describe("inputToCommand, planar_cam_bot", () => {
  it("sends the stopping input with no keys down", () => {
    const cmd = inputToCommand(keys(), "planar_cam_bot", PLANAR_BOX, 4);
    expect(cmd).toEqual({ type: "cmd", v_ref: [0, 0, 0], client_seq: 4 });
  });

  it("maps hold-right to a positive first component at the box edge", () => {
    const cmd = inputToCommand(keys("ArrowRight"), "planar_cam_bot", PLANAR_BOX, 0);
    expect(cmd.v_ref).toEqual([2, 0, 0]);
  });

  it("treats WASD and arrows the same", () => {
    const wasd = inputToCommand(keys("KeyD", "KeyW"), "planar_cam_bot", PLANAR_BOX, 0);
    const arrows = inputToCommand(keys("ArrowRight", "ArrowUp"), "planar_cam_bot", PLANAR_BOX, 0);
    expect(wasd.v_ref).toEqual(arrows.v_ref);
    expect(wasd.v_ref).toEqual([2, 2, 0]);
  });

  it("cancels opposing keys to zero", () => {
    const cmd = inputToCommand(keys("ArrowRight", "KeyA", "ArrowUp", "ArrowDown"),
                               "planar_cam_bot", PLANAR_BOX, 0);
    expect(cmd.v_ref).toEqual([0, 0, 0]);
  });

  it("drives the heading rate with Q and E", () => {
    expect(inputToCommand(keys("KeyQ"), "planar_cam_bot", PLANAR_BOX, 0).v_ref)
      .toEqual([0, 0, 1]);
    expect(inputToCommand(keys("KeyE"), "planar_cam_bot", PLANAR_BOX, 0).v_ref)
      .toEqual([0, 0, -1]);
    expect(inputToCommand(keys("KeyQ", "KeyE"), "planar_cam_bot", PLANAR_BOX, 0).v_ref)
      .toEqual([0, 0, 0]);
  });

  it("ignores unmapped keys", () => {
    const cmd = inputToCommand(keys("KeyZ", "Space"), "planar_cam_bot", PLANAR_BOX, 0);
    expect(cmd.v_ref).toEqual([0, 0, 0]);
  });

  it("respects an asymmetric box", () => {
    const box = [[-0.5, 2], [-2, 2], [-1, 1]];
    expect(inputToCommand(keys("ArrowLeft"), "planar_cam_bot", box, 0).v_ref[0]).toBe(-0.5);
    expect(inputToCommand(keys("ArrowRight"), "planar_cam_bot", box, 0).v_ref[0]).toBe(2);
  });
});

describe("inputToCommand, diff_drive_gimbal", () => {
  it("maps up/down to forward speed", () => {
    expect(inputToCommand(keys("ArrowUp"), "diff_drive_gimbal", DIFF_BOX, 0).v_ref)
      .toEqual([0.3, 0, 0]);
    expect(inputToCommand(keys("KeyS"), "diff_drive_gimbal", DIFF_BOX, 0).v_ref)
      .toEqual([-0.3, 0, 0]);
  });

  it("maps left/right to base yaw with left positive", () => {
    expect(inputToCommand(keys("ArrowLeft"), "diff_drive_gimbal", DIFF_BOX, 0).v_ref)
      .toEqual([0, 1, 0]);
    expect(inputToCommand(keys("KeyD"), "diff_drive_gimbal", DIFF_BOX, 0).v_ref)
      .toEqual([0, -1, 0]);
  });

  it("maps Q/E to the gimbal rate", () => {
    expect(inputToCommand(keys("KeyQ"), "diff_drive_gimbal", DIFF_BOX, 0).v_ref)
      .toEqual([0, 0, 2]);
    expect(inputToCommand(keys("KeyE"), "diff_drive_gimbal", DIFF_BOX, 0).v_ref)
      .toEqual([0, 0, -2]);
  });
});
