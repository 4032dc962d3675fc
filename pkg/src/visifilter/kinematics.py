"""Robot kinematic models and sensor-frame landmark motion.

Configurations evolve as q_dot = J(q) v for a velocity input v constrained to a
box. Each model also exposes the rigid pose of its camera and the linear maps
from v to the camera's body-frame twist, which drive how landmark coordinates
move in the sensor frame.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "RobotModel",
    "PlanarCamBot",
    "DiffDriveGimbal",
    "wrap_angle",
    "rotz",
    "world_to_sensor",
    "landmark_rate",
    "integrate_configuration",
    "rk4_joint_step",
    "propagate_landmark",
]

# Fixed mount rotations (sensor axes expressed in the x-forward heading frame).
# "planar": camera axis along sensor x, world z as the rotation axis.
# "optical": conventional camera frame, z forward / x right / y down.
_MOUNTS = {
    "planar": np.eye(3),
    "optical": np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
}


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = float(np.arctan2(np.sin(theta), np.cos(theta)))
    return np.pi if w == -np.pi else w


def rotz(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def world_to_sensor(rotation: np.ndarray, origin: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map world points (..., 3) into the sensor frame with pose (rotation, origin)."""
    return (np.asarray(points, dtype=float) - origin) @ rotation


class RobotModel:
    """Base kinematic model.

    Subclasses fill in the Jacobian of q_dot = J(q) v, the camera pose, and the
    twist maps (J_omega, J_v) sending v to the camera's body-frame angular and
    linear velocity. The input set is the box v_box (must contain v = 0 so a
    stopping input always exists).
    """

    name = "robot"
    coord_names: Tuple[str, ...] = ()
    angle_coords: Tuple[int, ...] = ()

    def __init__(self, v_box: np.ndarray):
        v_box = np.asarray(v_box, dtype=float)
        if v_box.ndim != 2 or v_box.shape[1] != 2:
            raise ValueError("v_box must have shape (m, 2)")
        if np.any(v_box[:, 0] > 0.0) or np.any(v_box[:, 1] < 0.0):
            raise ValueError("input box must contain the stopping input v = 0")
        self.v_box = v_box
        self.m = v_box.shape[0]
        self.n = len(self.coord_names)

    @property
    def input_polytope(self) -> Tuple[np.ndarray, np.ndarray]:
        """Half-space form (A_u, b_u) of the input box, A_u v <= b_u."""
        eye = np.eye(self.m)
        a_u = np.vstack([eye, -eye])
        b_u = np.concatenate([self.v_box[:, 1], -self.v_box[:, 0]])
        return a_u, b_u

    def clamp_input(self, v: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(v, dtype=float), self.v_box[:, 0], self.v_box[:, 1])

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def heading(self, q: np.ndarray) -> float:
        """World-frame camera heading angle."""
        raise NotImplementedError

    def _mount(self) -> np.ndarray:
        raise NotImplementedError

    def _position(self, q: np.ndarray) -> np.ndarray:
        return np.array([q[0], q[1], 0.0])

    def sensor_pose(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Rigid pose (R, t) of the sensor frame in the world."""
        return rotz(self.heading(q)) @ self._mount(), self._position(q)

    def _heading_twist_maps(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Twist maps in the x-forward heading frame, before the mount rotation."""
        raise NotImplementedError

    def twist_maps(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(J_omega, J_v) with omega_s = J_omega v and v_s = J_v v in the sensor frame."""
        j_om, j_v = self._heading_twist_maps(q)
        mount_t = self._mount().T
        return mount_t @ j_om, mount_t @ j_v


class PlanarCamBot(RobotModel):
    """Omnidirectional planar robot with a body-fixed camera.

    q = (x, y, heading), v = (vx, vy, heading rate), J = I. The camera looks
    along the heading; with the default planar mount the sensor x axis is the
    camera axis and world z the rotation axis.
    """

    name = "planar_cam_bot"
    coord_names = ("qx", "qy", "qtheta")
    angle_coords = (2,)

    def __init__(self, v_box: Optional[np.ndarray] = None, mount: str = "planar"):
        if v_box is None:
            v_box = np.array([[-2.0, 2.0], [-2.0, 2.0], [-1.0, 1.0]])
        super().__init__(v_box)
        if self.m != 3:
            raise ValueError("planar cam bot takes a 3-dof input")
        self._mount_rot = _MOUNTS[mount]

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        return np.eye(3)

    def heading(self, q: np.ndarray) -> float:
        return float(q[2])

    def _mount(self) -> np.ndarray:
        return self._mount_rot

    def _heading_twist_maps(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        c, s = np.cos(q[2]), np.sin(q[2])
        j_om = np.zeros((3, 3))
        j_om[2, 2] = 1.0
        # Linear velocity of the frame origin, rotated into the heading frame.
        j_v = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 0.0]])
        return j_om, j_v


class DiffDriveGimbal(RobotModel):
    """Differential-drive base with a panning camera gimbal.

    q = (x, y, base heading theta_r, gimbal angle theta_m), v = (forward speed,
    base turn rate, gimbal rate). The camera heading is theta_r + theta_m. The
    default optical mount gives the conventional z-forward camera frame used by
    image-plane visibility models.
    """

    name = "diff_drive_gimbal"
    coord_names = ("qx", "qy", "theta_r", "theta_m")
    angle_coords = (2, 3)

    def __init__(self, v_box: Optional[np.ndarray] = None, mount: str = "optical"):
        if v_box is None:
            v_box = np.array([[-0.3, 0.3], [-1.0, 1.0], [-2.0, 2.0]])
        super().__init__(v_box)
        if self.m != 3:
            raise ValueError("diff drive gimbal takes a 3-dof input")
        self._mount_rot = _MOUNTS[mount]

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        c, s = np.cos(q[2]), np.sin(q[2])
        return np.array(
            [[c, 0.0, 0.0], [s, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        )

    def heading(self, q: np.ndarray) -> float:
        return float(q[2] + q[3])

    def _mount(self) -> np.ndarray:
        return self._mount_rot

    def _heading_twist_maps(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cm, sm = np.cos(q[3]), np.sin(q[3])
        j_om = np.zeros((3, 3))
        j_om[2, 1] = 1.0
        j_om[2, 2] = 1.0
        # Base velocity (cos theta_r, sin theta_r) v_r seen from the camera
        # heading theta_r + theta_m depends only on the gimbal angle.
        j_v = np.array([[cm, 0.0, 0.0], [-sm, 0.0, 0.0], [0.0, 0.0, 0.0]])
        return j_om, j_v


MODEL_KINDS = {
    PlanarCamBot.name: PlanarCamBot,
    DiffDriveGimbal.name: DiffDriveGimbal,
}


def landmark_rate(p: np.ndarray, omega: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sensor-frame velocity of a static world point: p_dot = -omega x p - v.

    omega and v are the sensor frame's body-frame angular and linear velocity.
    Accepts a single point (3,) or a stack (N, 3).
    """
    p = np.asarray(p, dtype=float)
    return np.cross(p, omega) - v


def _joint_rate(
    model: RobotModel, q: np.ndarray, points: Optional[np.ndarray], v: np.ndarray
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    q_dot = model.jacobian(q) @ v
    if points is None:
        return q_dot, None
    j_om, j_v = model.twist_maps(q)
    return q_dot, landmark_rate(points, j_om @ v, j_v @ v)


def rk4_joint_step(
    model: RobotModel,
    q: np.ndarray,
    points: Optional[np.ndarray],
    v: np.ndarray,
    dt: float,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """One RK4 step of q_dot = J(q) v together with the sensor-frame motion of
    tracked points, holding v constant over the step."""
    kq1, kp1 = _joint_rate(model, q, points, v)
    kq2, kp2 = _joint_rate(model, q + 0.5 * dt * kq1, _adv(points, kp1, 0.5 * dt), v)
    kq3, kp3 = _joint_rate(model, q + 0.5 * dt * kq2, _adv(points, kp2, 0.5 * dt), v)
    kq4, kp4 = _joint_rate(model, q + dt * kq3, _adv(points, kp3, dt), v)
    q_next = q + (dt / 6.0) * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4)
    if points is None:
        return q_next, None
    p_next = points + (dt / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4)
    return q_next, p_next


def _adv(points: Optional[np.ndarray], rate: Optional[np.ndarray], dt: float):
    return None if points is None else points + dt * rate


def integrate_configuration(model: RobotModel, q: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    """Advance q by one RK4 step under a constant input v."""
    q_next, _ = rk4_joint_step(model, np.asarray(q, dtype=float), None, np.asarray(v, dtype=float), dt)
    return q_next


def propagate_landmark(
    model: RobotModel,
    q_trajectory: np.ndarray,
    v_trajectory: np.ndarray,
    p0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
) -> np.ndarray:
    """Integrate a landmark's sensor-frame position along a recorded trajectory.

    q_trajectory[k] is the configuration at t0 + k*dt and v_trajectory[k] the
    input held over [t0 + k*dt, t0 + (k+1)*dt). Each step re-anchors at the
    recorded configuration, so only the landmark coordinates accumulate
    integration error. Useful when world coordinates are unknown and the
    initial observation must be carried forward.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    steps = int(round((t1 - t0) / dt))
    q_trajectory = np.asarray(q_trajectory, dtype=float)
    v_trajectory = np.asarray(v_trajectory, dtype=float)
    if len(v_trajectory) < steps or len(q_trajectory) < steps:
        raise ValueError("trajectory shorter than the requested horizon")
    p = np.asarray(p0, dtype=float).reshape(1, 3).copy()
    for k in range(steps):
        _, p = rk4_joint_step(model, q_trajectory[k], p, v_trajectory[k], dt)
    return p[0]
