"""Field-of-view membership as smooth inequalities.

A visibility model maps a sensor-frame point p to a vector rho(p); the point is
inside the field of view exactly when every component is nonnegative. Gradients
of rho are what couple landmark motion to the robot input inside the filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

__all__ = [
    "Landmark",
    "LandmarkStore",
    "VisibilityModel",
    "SectorFov2D",
    "StereoFrustum",
    "visible_mask",
    "sample_features",
]


@dataclass(frozen=True)
class Landmark:
    """A static world point with a score weight."""

    id: int
    world_position: np.ndarray
    weight: float = 1.0


class LandmarkStore:
    """Immutable indexed collection of landmarks.

    Ids are dense integers assigned in insertion order; positions and weights
    are kept as arrays so per-tick geometry stays vectorized.
    """

    def __init__(self, positions: np.ndarray, weights: np.ndarray | float = 1.0):
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        if positions.shape[1] == 2:
            positions = np.hstack([positions, np.zeros((len(positions), 1))])
        if positions.shape[1] != 3:
            raise ValueError("landmark positions must be 2- or 3-vectors")
        self.positions = positions
        self.weights = np.broadcast_to(np.asarray(weights, dtype=float), (len(positions),)).copy()
        if np.any(self.weights <= 0.0):
            raise ValueError("landmark weights must be positive")

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self) -> Iterator[Landmark]:
        for i in range(len(self)):
            yield Landmark(i, self.positions[i], float(self.weights[i]))

    def positions_of(self, ids: Sequence[int]) -> np.ndarray:
        return self.positions[np.asarray(ids, dtype=int)]

    def weights_of(self, ids: Sequence[int]) -> np.ndarray:
        return self.weights[np.asarray(ids, dtype=int)]


class VisibilityModel:
    """Base class: rho maps sensor-frame points to d inequality values."""

    name = "visibility"
    d = 0

    def rho(self, p: np.ndarray) -> np.ndarray:
        return self.rho_many(np.asarray(p, dtype=float)[None, :])[0]

    def rho_grad(self, p: np.ndarray) -> np.ndarray:
        return self.rho_grad_many(np.asarray(p, dtype=float)[None, :])[0]

    def rho_many(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rho_grad_many(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def in_domain_many(self, points: np.ndarray) -> np.ndarray:
        """Mask of points where rho and its gradient are well defined."""
        raise NotImplementedError


class SectorFov2D(VisibilityModel):
    """Planar circular-sector field of view, apex at the camera.

    The sector opens along sensor x with full angle `angle_of_view` and radius
    `sensing_range`. For a point at bearing b and distance r the components are
    sin(aov/2 + b), sin(aov/2 - b) (scaled by r) and sensing_range - r, so all
    three are nonnegative exactly inside the closed sector.
    """

    name = "sector"
    d = 3

    def __init__(self, angle_of_view: float = 1.0, sensing_range: float = 1.0,
                 min_radius: float = 1e-6):
        if not 0.0 < angle_of_view < 2.0 * np.pi:
            raise ValueError("angle_of_view must lie in (0, 2*pi)")
        if sensing_range <= 0.0:
            raise ValueError("sensing_range must be positive")
        self.angle_of_view = float(angle_of_view)
        self.sensing_range = float(sensing_range)
        self.min_radius = float(min_radius)
        self._half_sin = np.sin(0.5 * self.angle_of_view)
        self._half_cos = np.cos(0.5 * self.angle_of_view)

    def rho_many(self, points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        s, c = self._half_sin, self._half_cos
        r = np.hypot(x, y)
        return np.stack([s * x + c * y, s * x - c * y, self.sensing_range - r], axis=1)

    def rho_grad_many(self, points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        r = np.hypot(x, y)
        r = np.where(r < self.min_radius, self.min_radius, r)
        n = len(points)
        s, c = self._half_sin, self._half_cos
        grads = np.zeros((n, 3, 3))
        grads[:, 0, 0] = s
        grads[:, 0, 1] = c
        grads[:, 1, 0] = s
        grads[:, 1, 1] = -c
        grads[:, 2, 0] = -x / r
        grads[:, 2, 1] = -y / r
        return grads

    def in_domain_many(self, points: np.ndarray) -> np.ndarray:
        return np.hypot(points[:, 0], points[:, 1]) >= self.min_radius


class StereoFrustum(VisibilityModel):
    """Pinhole-camera frustum with a stereo depth band.

    A point p in the z-forward camera frame projects to pixel (fx*px/pz + cx,
    fy*py/pz + cy) at depth pz; it is visible when the pixel lies inside the
    image rectangle and the depth inside [range_min, range_max]. The six rho
    components are the signed margins to those bounds.
    """

    name = "stereo_frustum"
    d = 6

    def __init__(self, fx: float = 300.0, fy: float = 300.0, cx: float = 320.0,
                 cy: float = 240.0, image_width: float = 640.0,
                 image_height: float = 480.0, range_min: float = 0.3,
                 range_max: float = 5.0, min_depth: float = 1e-6):
        if min(fx, fy, image_width, image_height) <= 0.0:
            raise ValueError("intrinsics and image size must be positive")
        if not 0.0 < range_min < range_max:
            raise ValueError("need 0 < range_min < range_max")
        self.fx, self.fy, self.cx, self.cy = float(fx), float(fy), float(cx), float(cy)
        self.image_width, self.image_height = float(image_width), float(image_height)
        self.range_min, self.range_max = float(range_min), float(range_max)
        self.min_depth = float(min_depth)

    def project(self, points: np.ndarray) -> np.ndarray:
        """Pixel coordinates and depth (u, v, depth) for each point."""
        z = np.where(np.abs(points[:, 2]) < self.min_depth, self.min_depth, points[:, 2])
        u = self.fx * points[:, 0] / z + self.cx
        v = self.fy * points[:, 1] / z + self.cy
        return np.stack([u, v, points[:, 2]], axis=1)

    def rho_many(self, points: np.ndarray) -> np.ndarray:
        m = self.project(points)
        u, v, depth = m[:, 0], m[:, 1], m[:, 2]
        return np.stack(
            [
                u,
                self.image_width - u,
                v,
                self.image_height - v,
                depth - self.range_min,
                self.range_max - depth,
            ],
            axis=1,
        )

    def rho_grad_many(self, points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        z = np.where(points[:, 2] < self.min_depth, self.min_depth, points[:, 2])
        n = len(points)
        du = np.stack([self.fx / z, np.zeros(n), -self.fx * x / z**2], axis=1)
        dv = np.stack([np.zeros(n), self.fy / z, -self.fy * y / z**2], axis=1)
        dd = np.zeros((n, 3))
        dd[:, 2] = 1.0
        return np.stack([du, -du, dv, -dv, dd, -dd], axis=1)

    def in_domain_many(self, points: np.ndarray) -> np.ndarray:
        return points[:, 2] >= self.min_depth


VISIBILITY_KINDS = {
    SectorFov2D.name: SectorFov2D,
    StereoFrustum.name: StereoFrustum,
}


def visible_mask(vis: VisibilityModel, sensor_points: np.ndarray) -> np.ndarray:
    """Boolean mask of points strictly inside the model's domain with all
    rho components nonnegative. Domain violations never count as visible."""
    sensor_points = np.atleast_2d(np.asarray(sensor_points, dtype=float))
    ok = vis.in_domain_many(sensor_points)
    mask = np.zeros(len(sensor_points), dtype=bool)
    if np.any(ok):
        mask[ok] = np.all(vis.rho_many(sensor_points[ok]) >= 0.0, axis=1)
    return mask


def sample_features(visible_ids: Sequence[int], n_max: int, seed: int) -> Tuple[int, ...]:
    """Uniform subset of at most n_max ids, without replacement, deterministic
    for a given seed. Ids are returned sorted."""
    ids = sorted(int(i) for i in visible_ids)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if len(ids) <= n_max:
        return tuple(ids)
    rng = np.random.default_rng(seed)
    keep = rng.choice(len(ids), size=n_max, replace=False)
    return tuple(sorted(ids[k] for k in keep))
