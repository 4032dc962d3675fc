"""Scenario documents: JSON schema, validation, defaults, construction.

A scenario file is a JSON object with an explicit schema_version. Validation
is strict: unknown keys anywhere in the document are rejected, with the field
path named in the error. `resolve` materializes every default so the resolved
document is self-contained; resolving a resolved document is a no-op, which is
what makes resolved_scenario.json re-runnable.
"""

from __future__ import annotations

import json
import math
import os
from importlib import resources
from typing import Dict, List, Optional, Sequence

import numpy as np

from .constraints import ConstraintParams
from .kinematics import MODEL_KINDS
from .safety_filter import FilterConfig
from .sim import CircularTracker, ExternalReference, Scenario, WallInspection
from .visibility import LandmarkStore, SectorFov2D, StereoFrustum
from .world import Disc, FeatureWall, Segment, World, generate_uniform_landmarks

SCHEMA_VERSION = 1
SEED_ENV_VAR = "VISIFILTER_SEED"

__all__ = [
    "ScenarioError",
    "SCHEMA_VERSION",
    "SEED_ENV_VAR",
    "resolve_scenario",
    "build_scenario",
    "load_scenario",
    "apply_overrides",
    "apply_seed_override",
    "bundled_scenario_path",
]


class ScenarioError(ValueError):
    """A scenario document that cannot be accepted, with the field named."""


def _fail(path: str, message: str):
    raise ScenarioError(f"{path}: {message}")


def _check_keys(obj: dict, allowed: Sequence[str], path: str):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        _fail(path, f"unknown key{'s' if len(unknown) > 1 else ''} " +
              ", ".join(repr(k) for k in unknown))


def _get(obj: dict, key: str, path: str, default=None, required: bool = False):
    if key not in obj:
        if required:
            _fail(path, f"missing required key '{key}'")
        return default
    return obj[key]


def _number(value, path: str, minimum=None, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        _fail(path, f"expected a finite number, got {value!r}")
    if positive and v <= 0:
        _fail(path, f"must be > 0, got {value!r}")
    if minimum is not None and v < minimum:
        _fail(path, f"must be >= {minimum}, got {value!r}")
    return v


def _integer(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value!r}")
    return value


def _vector(value, path: str, length: Optional[int] = None) -> List[float]:
    if not isinstance(value, list):
        _fail(path, f"expected an array, got {value!r}")
    if length is not None and len(value) != length:
        _fail(path, f"expected {length} entries, got {len(value)}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _interval_list(value, path: str, length: Optional[int] = None) -> List[List[float]]:
    if not isinstance(value, list):
        _fail(path, f"expected an array of [lo, hi] pairs, got {value!r}")
    if length is not None and len(value) != length:
        _fail(path, f"expected {length} intervals, got {len(value)}")
    out = []
    for i, pair in enumerate(value):
        lo, hi = _vector(pair, f"{path}[{i}]", length=2)
        if lo >= hi:
            _fail(f"{path}[{i}]", f"interval must have lo < hi, got [{lo}, {hi}]")
        out.append([lo, hi])
    return out


_MODEL_DIMS = {"planar_cam_bot": (3, 3), "diff_drive_gimbal": (4, 3)}
_DEFAULT_MOUNT = {"planar_cam_bot": "planar", "diff_drive_gimbal": "optical"}
_DEFAULT_V_BOX = {
    "planar_cam_bot": [[-2.0, 2.0], [-2.0, 2.0], [-1.0, 1.0]],
    "diff_drive_gimbal": [[-0.3, 0.3], [-1.0, 1.0], [-2.0, 2.0]],
}


def _resolve_model(obj, path: str) -> dict:
    _check_keys(obj, ("kind", "q0", "v_box", "mount"), path)
    kind = _get(obj, "kind", path, required=True)
    if kind not in _MODEL_DIMS:
        _fail(f"{path}.kind", f"unknown model kind {kind!r} "
              f"(expected one of {sorted(_MODEL_DIMS)})")
    n, m = _MODEL_DIMS[kind]
    q0 = _vector(_get(obj, "q0", path, required=True), f"{path}.q0", length=n)
    v_box = _interval_list(_get(obj, "v_box", path, _DEFAULT_V_BOX[kind]),
                           f"{path}.v_box", length=m)
    for i, (lo, hi) in enumerate(v_box):
        if lo > 0 or hi < 0:
            _fail(f"{path}.v_box[{i}]", "input box must contain 0")
    mount = _get(obj, "mount", path, _DEFAULT_MOUNT[kind])
    if mount not in ("planar", "optical"):
        _fail(f"{path}.mount", f"expected 'planar' or 'optical', got {mount!r}")
    return {"kind": kind, "q0": q0, "v_box": v_box, "mount": mount}


def _resolve_visibility(obj, path: str) -> dict:
    kind = _get(obj if isinstance(obj, dict) else {}, "kind", path, required=True)
    if kind == "sector":
        _check_keys(obj, ("kind", "angle_of_view", "sensing_range"), path)
        return {
            "kind": "sector",
            "angle_of_view": _number(_get(obj, "angle_of_view", path, 1.0),
                                     f"{path}.angle_of_view", positive=True),
            "sensing_range": _number(_get(obj, "sensing_range", path, 1.0),
                                     f"{path}.sensing_range", positive=True),
        }
    if kind == "stereo_frustum":
        allowed = ("kind", "fx", "fy", "cx", "cy", "image_width", "image_height",
                   "range_min", "range_max")
        _check_keys(obj, allowed, path)
        out = {"kind": "stereo_frustum"}
        defaults = {"fx": 300.0, "fy": 300.0, "cx": 320.0, "cy": 240.0,
                    "image_width": 640.0, "image_height": 480.0,
                    "range_min": 0.3, "range_max": 5.0}
        for key, dv in defaults.items():
            out[key] = _number(_get(obj, key, path, dv), f"{path}.{key}",
                               positive=True)
        if out["range_min"] >= out["range_max"]:
            _fail(path, "range_min must be < range_max")
        return out
    _fail(f"{path}.kind", f"unknown visibility kind {kind!r} "
          "(expected 'sector' or 'stereo_frustum')")


def _resolve_obstacle(obj, path: str) -> dict:
    kind = _get(obj if isinstance(obj, dict) else {}, "kind", path, required=True)
    if kind == "disc":
        _check_keys(obj, ("kind", "center", "radius"), path)
        return {
            "kind": "disc",
            "center": _vector(_get(obj, "center", path, required=True),
                              f"{path}.center", length=2),
            "radius": _number(_get(obj, "radius", path, required=True),
                              f"{path}.radius", positive=True),
        }
    if kind == "segment":
        _check_keys(obj, ("kind", "start", "end", "thickness"), path)
        return {
            "kind": "segment",
            "start": _vector(_get(obj, "start", path, required=True),
                             f"{path}.start", length=2),
            "end": _vector(_get(obj, "end", path, required=True),
                           f"{path}.end", length=2),
            "thickness": _number(_get(obj, "thickness", path, 0.0),
                                 f"{path}.thickness", minimum=0.0),
        }
    _fail(f"{path}.kind", f"unknown obstacle kind {kind!r} "
          "(expected 'disc' or 'segment')")


def _resolve_wall(obj, path: str) -> dict:
    _check_keys(obj, ("start", "end", "densities", "z_band", "seed", "weight"), path)
    densities = _vector(_get(obj, "densities", path, required=True),
                        f"{path}.densities")
    if not densities:
        _fail(f"{path}.densities", "need at least one section density")
    for i, d in enumerate(densities):
        if d < 0:
            _fail(f"{path}.densities[{i}]", "density must be >= 0")
    z_band = _vector(_get(obj, "z_band", path, [0.0, 0.0]), f"{path}.z_band",
                     length=2)
    if z_band[0] > z_band[1]:
        _fail(f"{path}.z_band", "band must have lo <= hi")
    return {
        "start": _vector(_get(obj, "start", path, required=True),
                         f"{path}.start", length=2),
        "end": _vector(_get(obj, "end", path, required=True),
                       f"{path}.end", length=2),
        "densities": densities,
        "z_band": z_band,
        "seed": _integer(_get(obj, "seed", path, 0), f"{path}.seed", minimum=0),
        "weight": _number(_get(obj, "weight", path, 1.0), f"{path}.weight",
                          positive=True),
    }


def _resolve_world(obj, path: str) -> dict:
    if obj is None:
        obj = {}
    _check_keys(obj, ("obstacles", "walls", "bounds"), path)
    obstacles = _get(obj, "obstacles", path, [])
    walls = _get(obj, "walls", path, [])
    if not isinstance(obstacles, list):
        _fail(f"{path}.obstacles", "expected an array")
    if not isinstance(walls, list):
        _fail(f"{path}.walls", "expected an array")
    bounds = _get(obj, "bounds", path)
    return {
        "obstacles": [_resolve_obstacle(o, f"{path}.obstacles[{i}]")
                      for i, o in enumerate(obstacles)],
        "walls": [_resolve_wall(w, f"{path}.walls[{i}]")
                  for i, w in enumerate(walls)],
        "bounds": None if bounds is None
        else _interval_list(bounds, f"{path}.bounds", length=2),
    }


def _resolve_landmarks(obj, path: str) -> dict:
    kind = _get(obj if isinstance(obj, dict) else {}, "kind", path, required=True)
    if kind == "uniform_box":
        _check_keys(obj, ("kind", "count", "box", "weight", "seed"), path)
        return {
            "kind": "uniform_box",
            "count": _integer(_get(obj, "count", path, required=True),
                              f"{path}.count", minimum=1),
            "box": _interval_list(_get(obj, "box", path, [[-1.0, 1.0], [-1.0, 1.0]]),
                                  f"{path}.box", length=2),
            "weight": _number(_get(obj, "weight", path, 1.0), f"{path}.weight",
                              positive=True),
            "seed": _integer(_get(obj, "seed", path, 0), f"{path}.seed", minimum=0),
        }
    if kind == "walls":
        _check_keys(obj, ("kind",), path)
        return {"kind": "walls"}
    if kind == "explicit":
        _check_keys(obj, ("kind", "positions", "weights"), path)
        positions = _get(obj, "positions", path, required=True)
        if not isinstance(positions, list) or not positions:
            _fail(f"{path}.positions", "expected a non-empty array of points")
        pts = []
        for i, p in enumerate(positions):
            v = _vector(p, f"{path}.positions[{i}]")
            if len(v) not in (2, 3):
                _fail(f"{path}.positions[{i}]", "expected 2 or 3 coordinates")
            pts.append(v if len(v) == 3 else v + [0.0])
        weights = _get(obj, "weights", path, 1.0)
        if isinstance(weights, list):
            weights = _vector(weights, f"{path}.weights", length=len(pts))
            for i, w in enumerate(weights):
                if w <= 0:
                    _fail(f"{path}.weights[{i}]", "weight must be > 0")
        else:
            weights = _number(weights, f"{path}.weights", positive=True)
        return {"kind": "explicit", "positions": pts, "weights": weights}
    _fail(f"{path}.kind", f"unknown landmark kind {kind!r} "
          "(expected 'uniform_box', 'walls', or 'explicit')")


def _resolve_filter(obj, path: str, m: int) -> dict:
    allowed = ("required_score", "alpha", "collision_enabled", "robot_radius",
               "input_cost_diag", "k_lambda", "k_mu", "dt", "camera_rate",
               "n_max", "seed", "eps_num", "margin")
    _check_keys(obj, allowed, path)
    alpha = _get(obj, "alpha", path, 1.0)
    if isinstance(alpha, list):
        alphas = _vector(alpha, f"{path}.alpha", length=6)
    else:
        alphas = [_number(alpha, f"{path}.alpha")] * 6
    for i, a in enumerate(alphas):
        if a <= 0:
            _fail(f"{path}.alpha", f"rate {i + 1} must be > 0, got {a}")
    return {
        "required_score": _number(_get(obj, "required_score", path, required=True),
                                  f"{path}.required_score", positive=True),
        "alpha": alphas,
        "collision_enabled": _boolean(_get(obj, "collision_enabled", path, False),
                                      f"{path}.collision_enabled"),
        "robot_radius": _number(_get(obj, "robot_radius", path, 0.3),
                                f"{path}.robot_radius", minimum=0.0),
        "input_cost_diag": _vector(_get(obj, "input_cost_diag", path, [1.0] * m),
                                   f"{path}.input_cost_diag", length=m),
        "k_lambda": _number(_get(obj, "k_lambda", path, 1e-3),
                            f"{path}.k_lambda", positive=True),
        "k_mu": _number(_get(obj, "k_mu", path, 1e-3),
                        f"{path}.k_mu", positive=True),
        "dt": _number(_get(obj, "dt", path, 0.01), f"{path}.dt", positive=True),
        "camera_rate": _number(_get(obj, "camera_rate", path, 10.0),
                               f"{path}.camera_rate", positive=True),
        "n_max": _integer(_get(obj, "n_max", path, 50), f"{path}.n_max", minimum=1),
        "seed": _integer(_get(obj, "seed", path, 0), f"{path}.seed", minimum=0),
        "eps_num": _number(_get(obj, "eps_num", path, 1e-6),
                           f"{path}.eps_num", positive=True),
        "margin": _number(_get(obj, "margin", path, 1e-3),
                          f"{path}.margin", minimum=0.0),
    }


def _boolean(value, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected true or false, got {value!r}")
    return value


def _resolve_reference(obj, path: str, m: int) -> dict:
    kind = _get(obj if isinstance(obj, dict) else {}, "kind", path, required=True)
    if kind == "circular_tracker":
        _check_keys(obj, ("kind", "center", "radius", "angular_rate", "gain"), path)
        return {
            "kind": kind,
            "center": _vector(_get(obj, "center", path, [0.0, 0.0]),
                              f"{path}.center", length=2),
            "radius": _number(_get(obj, "radius", path, 1.0),
                              f"{path}.radius", positive=True),
            "angular_rate": _number(_get(obj, "angular_rate", path, 1.0),
                                    f"{path}.angular_rate"),
            "gain": _number(_get(obj, "gain", path, 2.0), f"{path}.gain",
                            minimum=0.0),
        }
    if kind == "wall_inspection":
        allowed = ("kind", "forward_speed", "heading_gain", "servo_gain",
                   "wall_heading", "normal_heading")
        _check_keys(obj, allowed, path)
        defaults = {"forward_speed": 0.15, "heading_gain": 2.0, "servo_gain": 2.0,
                    "wall_heading": 0.0, "normal_heading": math.pi / 2}
        return {"kind": kind, **{k: _number(_get(obj, k, path, dv), f"{path}.{k}")
                                 for k, dv in defaults.items()}}
    if kind == "external":
        _check_keys(obj, ("kind", "commands", "hold_timeout"), path)
        commands = _get(obj, "commands", path, [])
        if not isinstance(commands, list):
            _fail(f"{path}.commands", "expected an array of [tick, v] pairs")
        out = []
        for i, entry in enumerate(commands):
            if not isinstance(entry, list) or len(entry) != 2:
                _fail(f"{path}.commands[{i}]", "expected a [tick, v] pair")
            tick = _integer(entry[0], f"{path}.commands[{i}][0]", minimum=0)
            v = _vector(entry[1], f"{path}.commands[{i}][1]", length=m)
            out.append([tick, v])
        return {
            "kind": kind,
            "commands": out,
            "hold_timeout": _number(_get(obj, "hold_timeout", path, 0.5),
                                    f"{path}.hold_timeout", minimum=0.0),
        }
    _fail(f"{path}.kind", f"unknown reference kind {kind!r} (expected "
          "'circular_tracker', 'wall_inspection', or 'external')")


def resolve_scenario(doc: dict, default_name: str = "scenario") -> dict:
    """Validate a scenario document and materialize every default.

    Raises ScenarioError naming the offending field. The result resolves to
    itself, so writing it out yields a re-runnable, fully explicit document.
    """
    top = ("schema_version", "name", "mode", "duration", "model", "visibility",
           "world", "landmarks", "filter", "reference")
    _check_keys(doc, top, "scenario")
    version = _get(doc, "schema_version", "scenario", required=True)
    if version != SCHEMA_VERSION:
        _fail("scenario.schema_version",
              f"unsupported version {version!r} (this build reads {SCHEMA_VERSION})")

    name = _get(doc, "name", "scenario", default_name)
    if not isinstance(name, str) or not name:
        _fail("scenario.name", f"expected a non-empty string, got {name!r}")
    mode = _get(doc, "mode", "scenario", "filtered")
    if mode not in ("filtered", "baseline"):
        _fail("scenario.mode", f"expected 'filtered' or 'baseline', got {mode!r}")
    duration = _number(_get(doc, "duration", "scenario", required=True),
                       "scenario.duration")
    if duration <= 0:
        _fail("scenario.duration", f"duration > 0 required, got {duration!r}")

    model = _resolve_model(_get(doc, "model", "scenario", required=True),
                           "scenario.model")
    _, m = _MODEL_DIMS[model["kind"]]
    resolved = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "mode": mode,
        "duration": duration,
        "model": model,
        "visibility": _resolve_visibility(
            _get(doc, "visibility", "scenario", required=True),
            "scenario.visibility"),
        "world": _resolve_world(_get(doc, "world", "scenario"), "scenario.world"),
        "landmarks": _resolve_landmarks(
            _get(doc, "landmarks", "scenario", required=True),
            "scenario.landmarks"),
        "filter": _resolve_filter(_get(doc, "filter", "scenario", required=True),
                                  "scenario.filter", m),
        "reference": _resolve_reference(
            _get(doc, "reference", "scenario", required=True),
            "scenario.reference", m),
    }
    if resolved["landmarks"]["kind"] == "walls" and not resolved["world"]["walls"]:
        _fail("scenario.landmarks", "kind 'walls' needs scenario.world.walls")
    return resolved


def _build_store(resolved: dict) -> LandmarkStore:
    lm = resolved["landmarks"]
    if lm["kind"] == "uniform_box":
        positions = generate_uniform_landmarks(lm["count"], lm["box"], lm["seed"])
        return LandmarkStore(positions, lm["weight"])
    if lm["kind"] == "explicit":
        return LandmarkStore(np.asarray(lm["positions"]), lm["weights"])
    walls = [FeatureWall(w["start"], w["end"], w["densities"],
                         tuple(w["z_band"]), w["seed"], w["weight"])
             for w in resolved["world"]["walls"]]
    batches = [w.generate() for w in walls]
    positions = np.concatenate(batches)
    weights = np.concatenate([np.full(len(b), w.weight)
                              for w, b in zip(walls, batches)])
    return LandmarkStore(positions, weights)


def build_scenario(resolved: dict) -> Scenario:
    """Instantiate the simulation objects a resolved document describes."""
    md = resolved["model"]
    model = MODEL_KINDS[md["kind"]](v_box=md["v_box"], mount=md["mount"])

    vd = dict(resolved["visibility"])
    kind = vd.pop("kind")
    vis = SectorFov2D(**vd) if kind == "sector" else StereoFrustum(**vd)

    wd = resolved["world"]
    obstacles = []
    for o in wd["obstacles"]:
        if o["kind"] == "disc":
            obstacles.append(Disc(tuple(o["center"]), o["radius"]))
        else:
            obstacles.append(Segment(tuple(o["start"]), tuple(o["end"]),
                                     o["thickness"]))
    walls = tuple(FeatureWall(w["start"], w["end"], w["densities"],
                              tuple(w["z_band"]), w["seed"], w["weight"])
                  for w in wd["walls"])
    bounds = None if wd["bounds"] is None else tuple(tuple(b) for b in wd["bounds"])
    world = World(obstacles=tuple(obstacles), walls=walls, bounds=bounds)

    fd = resolved["filter"]
    cfg = FilterConfig(
        constraints=ConstraintParams(
            required_score=fd["required_score"],
            alphas=tuple(fd["alpha"]),
            collision_enabled=fd["collision_enabled"],
            robot_radius=fd["robot_radius"],
        ),
        input_cost=np.asarray(fd["input_cost_diag"]),
        k_lambda=fd["k_lambda"],
        k_mu=fd["k_mu"],
        dt=fd["dt"],
        camera_rate=fd["camera_rate"],
        n_max=fd["n_max"],
        seed=fd["seed"],
        eps_num=fd["eps_num"],
        margin=fd["margin"],
    )

    rd = resolved["reference"]
    if rd["kind"] == "circular_tracker":
        reference = CircularTracker(rd["center"], rd["radius"],
                                    rd["angular_rate"], rd["gain"])
    elif rd["kind"] == "wall_inspection":
        reference = WallInspection(rd["forward_speed"], rd["heading_gain"],
                                   rd["servo_gain"], rd["wall_heading"],
                                   rd["normal_heading"])
    else:
        reference = ExternalReference(
            [(tick, v) for tick, v in rd["commands"]],
            rd["hold_timeout"], n_inputs=model.m)

    return Scenario(
        name=resolved["name"],
        model=model,
        vis=vis,
        world=world,
        store=_build_store(resolved),
        q0=np.asarray(md["q0"]),
        filter_cfg=cfg,
        reference=reference,
        duration=resolved["duration"],
        mode=resolved["mode"],
    )


def apply_overrides(doc: dict, assignments: Sequence[str]) -> dict:
    """Apply `key.path=value` overrides; values parse as JSON, else strings."""
    out = json.loads(json.dumps(doc))
    for item in assignments:
        if "=" not in item:
            raise ScenarioError(f"override {item!r}: expected key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.split(".")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        for k in keys[:-1]:
            if not isinstance(node, dict) or k not in node:
                raise ScenarioError(f"override {dotted!r}: no such field {k!r}")
            node = node[k]
        if not isinstance(node, dict):
            raise ScenarioError(f"override {dotted!r}: {keys[-2]!r} is not an object")
        node[keys[-1]] = value
    return out


def apply_seed_override(doc: dict, seed: int) -> dict:
    """Set every key named 'seed', at any depth, to the given value."""
    def walk(node):
        if isinstance(node, dict):
            return {k: seed if k == "seed" else walk(v) for k, v in node.items()}
        if isinstance(node, list):
            return [walk(v) for v in node]
        return node
    return walk(doc)


def load_scenario(path: str, overrides: Sequence[str] = (),
                  seed: Optional[int] = None):
    """Read, override, validate, and build: returns (Scenario, resolved doc).

    The seed argument replaces every seed in the document; when it is None the
    VISIFILTER_SEED environment variable, if set, plays that role.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from exc
    if overrides:
        doc = apply_overrides(doc, overrides)
    if seed is None and os.environ.get(SEED_ENV_VAR):
        try:
            seed = int(os.environ[SEED_ENV_VAR])
        except ValueError:
            raise ScenarioError(
                f"{SEED_ENV_VAR}={os.environ[SEED_ENV_VAR]!r}: not an integer")
    if seed is not None:
        doc = apply_seed_override(doc, seed)
    stem = os.path.splitext(os.path.basename(path))[0] or "scenario"
    resolved = resolve_scenario(doc, default_name=stem)
    return build_scenario(resolved), resolved


def bundled_scenario_path(name: str) -> str:
    """Filesystem path of a scenario shipped inside the package."""
    ref = resources.files("visifilter") / "scenarios" / f"{name}.json"
    if not ref.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return str(ref)
