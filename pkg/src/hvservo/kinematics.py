"""Constant-curvature forward kinematics of the two-tendon section.

The section bends as a circular arc: bending-plane angle phi = atan2(q2, q1),
bend angle theta = |q| / r_t, curvature kappa = theta / L.  Tendon
displacements q are in millimetres throughout.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import rot_y, rot_z, rotation_log

# Dataset amplitude bound for |q1|, |q2|. The kinematics itself is defined
# beyond it (finite-difference probes and quadrant starts exceed the radius).
Q_MAX_MM = 10.0


@dataclass
class RobotParams:
    backbone_length_mm: float = 500.0
    tendon_pitch_radius_mm: float = 10.0
    straight_config_epsilon: float = 1e-6
    fd_delta_mm: float = 0.1

    def __post_init__(self):
        if self.backbone_length_mm <= 0 or self.tendon_pitch_radius_mm <= 0:
            raise ValueError("backbone length and pitch radius must be positive")


@dataclass
class Pose:
    """Tip position (mm) and base->tip rotation (columns = tip axes in base)."""

    position: np.ndarray
    rotation: np.ndarray


def tip_pose(q, params: RobotParams | None = None) -> Pose:
    """Arc tip pose for tendon displacements q = (q1, q2) mm."""
    params = params or RobotParams()
    q = np.asarray(q, dtype=float)
    if q.shape != (2,) or not np.isfinite(q).all():
        raise ValueError(f"invalid tendon state {q!r}")
    length = params.backbone_length_mm
    theta = float(np.hypot(q[0], q[1])) / params.tendon_pitch_radius_mm
    phi = float(np.arctan2(q[1], q[0]))
    if theta < params.straight_config_epsilon:
        # Series for (1-cos)/theta and sin/theta: continuous through theta=0.
        a = theta / 2.0 - theta**3 / 24.0
        b = 1.0 - theta**2 / 6.0
    else:
        a = (1.0 - np.cos(theta)) / theta
        b = np.sin(theta) / theta
    rz = rot_z(phi)
    position = rz @ np.array([length * a, 0.0, length * b])
    rotation = rz @ rot_y(theta) @ rot_z(-phi)
    return Pose(position, rotation)


def robot_jacobian_fd(q, params: RobotParams | None = None, delta: float | None = None):
    """6x2 forward-difference robot Jacobian at q.

    Rows 0-2: translational velocity (mm per mm of tendon), base frame.
    Rows 3-5: angular velocity (rad per mm), extracted from the relative
    rotation log (tip/body frame).
    """
    params = params or RobotParams()
    delta = params.fd_delta_mm if delta is None else float(delta)
    if delta <= 0:
        raise ValueError("finite-difference step must be positive")
    q = np.asarray(q, dtype=float)
    if q.shape != (2,) or not np.isfinite(q).all():
        raise ValueError(f"invalid tendon state {q!r}")
    base = tip_pose(q, params)
    jac = np.zeros((6, 2))
    for j in range(2):
        qj = q.copy()
        qj[j] += delta
        probe = tip_pose(qj, params)
        jac[:3, j] = (probe.position - base.position) / delta
        jac[3:, j] = rotation_log(base.rotation.T @ probe.rotation) / delta
    return jac
