import numpy as np
import pytest

from visifilter.world import (
    Disc,
    FeatureWall,
    Segment,
    World,
    generate_uniform_landmarks,
    signed_distance,
)


def test_disc_sdf_hand_values():
    disc = Disc(center=(0.0, 0.0), radius=1.0)
    d, g = disc.sdf(np.array([2.0, 0.0]))
    assert d == pytest.approx(1.0)
    assert np.allclose(g, [1.0, 0.0])
    d, g = disc.sdf(np.array([0.0, 0.5]))
    assert d == pytest.approx(-0.5)
    assert np.allclose(g, [0.0, 1.0])


def test_disc_sdf_center_fallback():
    disc = Disc(center=(1.0, 1.0), radius=0.4)
    d, g = disc.sdf(np.array([1.0, 1.0]))
    assert d == pytest.approx(-0.4)
    assert np.allclose(g, [1.0, 0.0])


def test_segment_sdf_hand_values():
    seg = Segment(start=(0.0, 0.0), end=(2.0, 0.0), thickness=0.2)
    d, g = seg.sdf(np.array([1.0, 1.0]))
    assert d == pytest.approx(0.9)
    assert np.allclose(g, [0.0, 1.0])
    # Past the endpoint the distance is measured to the cap.
    d, g = seg.sdf(np.array([3.0, 0.0]))
    assert d == pytest.approx(0.9)
    assert np.allclose(g, [1.0, 0.0])


def test_sdf_gradients_are_unit_and_match_finite_differences():
    shapes = [Disc(center=(0.3, -0.2), radius=0.5),
              Segment(start=(-1.0, 0.0), end=(1.0, 0.5), thickness=0.1)]
    rng = np.random.default_rng(9)
    for shape in shapes:
        for _ in range(25):
            p = rng.uniform(-2.0, 2.0, size=2)
            d, g = shape.sdf(p)
            if abs(d) < 1e-3:
                continue  # kink at the surface
            assert abs(np.linalg.norm(g) - 1.0) < 1e-9
            eps = 1e-6
            num = np.array([
                (shape.sdf(p + [eps, 0.0])[0] - shape.sdf(p - [eps, 0.0])[0]),
                (shape.sdf(p + [0.0, eps])[0] - shape.sdf(p - [0.0, eps])[0]),
            ]) / (2.0 * eps)
            assert np.allclose(g, num, atol=1e-6)


def test_signed_distance_takes_minimum_with_lowest_index_tie():
    near = Disc(center=(0.0, 0.0), radius=0.5)
    far = Disc(center=(10.0, 0.0), radius=0.5)
    world = World(obstacles=(far, near))
    d, g = signed_distance(world, np.array([1.5, 0.0]))
    assert d == pytest.approx(1.0)
    assert np.allclose(g, [1.0, 0.0])
    # Equidistant pair: the lower-index obstacle supplies the gradient.
    left = Disc(center=(-1.0, 0.0), radius=0.2)
    right = Disc(center=(1.0, 0.0), radius=0.2)
    d, g = signed_distance(World(obstacles=(left, right)), np.array([0.0, 0.0]))
    assert d == pytest.approx(0.8)
    assert np.allclose(g, [1.0, 0.0])


def test_signed_distance_empty_world():
    d, g = signed_distance(World(), np.array([0.0, 0.0]))
    assert d == pytest.approx(1e9)
    assert np.allclose(g, [0.0, 0.0])


def test_feature_wall_section_counts():
    wall = FeatureWall(start=(0.0, 0.0), end=(10.0, 0.0),
                       densities=(2.0, 0.4, 2.0))
    # Three sections of length 10/3; counts round(d * 10/3).
    assert wall.section_counts() == [7, 1, 7]


def test_feature_wall_generate_deterministic_and_on_segment():
    wall = FeatureWall(start=(0.0, 0.0), end=(4.0, 3.0), densities=(3.0, 1.0),
                       z_band=(0.2, 0.8), seed=42)
    pts = wall.generate()
    again = wall.generate()
    assert np.array_equal(pts, again)
    assert len(pts) == sum(wall.section_counts())
    # Every point projects onto the segment with zero lateral offset.
    a = np.array([0.0, 0.0])
    direction = np.array([4.0, 3.0]) / 5.0
    lateral = (pts[:, :2] - a) - ((pts[:, :2] - a) @ direction)[:, None] * direction
    assert np.max(np.abs(lateral)) < 1e-12
    assert np.all((pts[:, 2] >= 0.2) & (pts[:, 2] <= 0.8))


def test_feature_wall_generate_empty():
    wall = FeatureWall(start=(0.0, 0.0), end=(1.0, 0.0), densities=(0.0,))
    assert wall.generate().shape == (0, 3)


def test_generate_uniform_landmarks():
    box = [[-1.0, 2.0], [0.5, 1.5]]
    pts = generate_uniform_landmarks(25, box, seed=5)
    assert pts.shape == (25, 3)
    assert np.all(pts[:, 0] >= -1.0) and np.all(pts[:, 0] <= 2.0)
    assert np.all(pts[:, 1] >= 0.5) and np.all(pts[:, 1] <= 1.5)
    assert np.allclose(pts[:, 2], 0.0)
    assert np.array_equal(pts, generate_uniform_landmarks(25, box, seed=5))
    assert not np.array_equal(pts, generate_uniform_landmarks(25, box, seed=6))
