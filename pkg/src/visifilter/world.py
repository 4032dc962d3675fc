"""Planar worlds: signed-distance obstacles, feature-carrying walls, landmark fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Disc",
    "Segment",
    "FeatureWall",
    "World",
    "signed_distance",
    "generate_uniform_landmarks",
]

_FAR_AWAY = 1e9


@dataclass(frozen=True)
class Disc:
    center: Tuple[float, float]
    radius: float

    def sdf(self, point: np.ndarray) -> Tuple[float, np.ndarray]:
        delta = point - np.asarray(self.center, dtype=float)
        dist = float(np.hypot(delta[0], delta[1]))
        if dist < 1e-12:
            return -self.radius, np.array([1.0, 0.0])
        return dist - self.radius, delta / dist


@dataclass(frozen=True)
class Segment:
    """Line segment with a stroke thickness; the surface is the set of points
    at distance thickness/2 from the segment."""

    start: Tuple[float, float]
    end: Tuple[float, float]
    thickness: float = 0.0

    def sdf(self, point: np.ndarray) -> Tuple[float, np.ndarray]:
        a = np.asarray(self.start, dtype=float)
        b = np.asarray(self.end, dtype=float)
        ab = b - a
        denom = float(ab @ ab)
        frac = 0.0 if denom < 1e-24 else float(np.clip((point - a) @ ab / denom, 0.0, 1.0))
        delta = point - (a + frac * ab)
        dist = float(np.hypot(delta[0], delta[1]))
        if dist < 1e-12:
            # On the axis: fall back to a perpendicular of the segment.
            if denom < 1e-24:
                return -0.5 * self.thickness, np.array([1.0, 0.0])
            normal = np.array([-ab[1], ab[0]]) / np.sqrt(denom)
            return -0.5 * self.thickness, normal
        return dist - 0.5 * self.thickness, delta / dist


@dataclass(frozen=True)
class FeatureWall:
    """A wall segment carrying visual features at piecewise-constant density.

    densities[j] (features per meter) applies to the j-th of len(densities)
    equal-length sections; each section gets round(density * section_length)
    features placed uniformly along it, at heights uniform in z_band.
    """

    start: Tuple[float, float]
    end: Tuple[float, float]
    densities: Tuple[float, ...]
    z_band: Tuple[float, float] = (0.0, 0.0)
    seed: int = 0
    weight: float = 1.0

    def section_counts(self) -> List[int]:
        a = np.asarray(self.start, dtype=float)
        b = np.asarray(self.end, dtype=float)
        section_len = float(np.hypot(*(b - a))) / len(self.densities)
        return [int(round(d * section_len)) for d in self.densities]

    def generate(self) -> np.ndarray:
        """Feature world positions, deterministic for a given seed."""
        rng = np.random.default_rng(self.seed)
        a = np.asarray(self.start, dtype=float)
        b = np.asarray(self.end, dtype=float)
        n_sec = len(self.densities)
        points = []
        for j, count in enumerate(self.section_counts()):
            lo, hi = j / n_sec, (j + 1) / n_sec
            fracs = rng.uniform(lo, hi, size=count)
            heights = rng.uniform(self.z_band[0], self.z_band[1], size=count)
            xy = a[None, :] + fracs[:, None] * (b - a)[None, :]
            points.append(np.column_stack([xy, heights]))
        if not points:
            return np.zeros((0, 3))
        return np.vstack(points)


@dataclass(frozen=True)
class World:
    obstacles: Tuple[object, ...] = ()
    walls: Tuple[FeatureWall, ...] = ()
    bounds: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None


def signed_distance(world: World, point: np.ndarray) -> Tuple[float, np.ndarray]:
    """Distance to the nearest obstacle surface (negative inside) and its
    spatial gradient. Ties go to the lowest-index obstacle; an empty world
    reports a large positive distance with a zero gradient."""
    point = np.asarray(point, dtype=float)[:2]
    best: Tuple[float, np.ndarray] = (_FAR_AWAY, np.zeros(2))
    for obstacle in world.obstacles:
        value, grad = obstacle.sdf(point)
        if value < best[0]:
            best = (value, grad)
    return best


def generate_uniform_landmarks(
    count: int,
    box: Sequence[Sequence[float]],
    seed: int,
) -> np.ndarray:
    """count world points uniform in an axis-aligned planar box, z = 0."""
    rng = np.random.default_rng(seed)
    box = np.asarray(box, dtype=float)
    xy = rng.uniform(box[:, 0], box[:, 1], size=(count, 2))
    return np.hstack([xy, np.zeros((count, 1))])
