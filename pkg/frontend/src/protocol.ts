// Wire types for the teleoperation service. The server sends one JSON
// document per WebSocket frame and answers GET /scenario with the resolved
// scenario document; everything here mirrors those payloads field for field.

export interface LandmarkView {
  id: number;
  p: number[];
  visible: boolean;
  active: boolean;
  lam: number | null;
}

export interface StateMessage {
  type: "state";
  t: number;
  q: number[];
  camera_heading: number;
  landmarks: LandmarkView[];
  w: number | null;
  w_hat: number | null;
  W: number;
  h_min: Record<string, number | null>;
  v_ref: number[];
  v_star: number[];
  event: boolean;
}

export interface CommandMessage {
  type: "cmd";
  v_ref: number[];
  client_seq: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export interface ObstacleDoc {
  kind: string;
  center?: number[];
  radius?: number;
  start?: number[];
  end?: number[];
  thickness?: number;
}

export interface WallDoc {
  start: number[];
  end: number[];
  densities: number[];
  z_band: number[];
}

export interface ScenarioDoc {
  name: string;
  duration: number;
  model: { kind: string; q0: number[]; v_box: number[][]; mount?: string };
  visibility: {
    kind: string;
    angle_of_view?: number;
    sensing_range?: number;
    fx?: number;
    image_width?: number;
    range_min?: number;
    range_max?: number;
  };
  world: { obstacles: ObstacleDoc[]; walls: WallDoc[]; bounds: number[][] | null };
  filter: { required_score: number };
}

export type ServerFrame =
  | { kind: "state"; state: StateMessage }
  | { kind: "error"; message: string }
  | { kind: "ignored"; detail: string };

function isNumberArray(x: unknown): x is number[] {
  return Array.isArray(x) && x.every((c) => typeof c === "number");
}

// Malformed frames are reported but never thrown; the stream keeps going.
export function decodeServerFrame(text: string): ServerFrame {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch (err) {
    return { kind: "ignored", detail: "not JSON: " + String(err) };
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    return { kind: "ignored", detail: "not an object" };
  }
  const frame = msg as Record<string, unknown>;
  if (frame.type === "error") {
    return { kind: "error", message: String(frame.message ?? "unknown error") };
  }
  if (frame.type !== "state") {
    return { kind: "ignored", detail: "unexpected frame type " + String(frame.type) };
  }
  if (typeof frame.t !== "number" || !isNumberArray(frame.q)
      || !isNumberArray(frame.v_ref) || !isNumberArray(frame.v_star)
      || !Array.isArray(frame.landmarks)) {
    return { kind: "ignored", detail: "malformed state frame" };
  }
  return { kind: "state", state: msg as StateMessage };
}
