"""Classical image-based visual servoing: per-point image Jacobian, stacked
image Jacobian, base->camera frame mapping, pseudo-inverse control law, and
the color-blob feature detector."""

from dataclasses import dataclass

import numpy as np

from .kinematics import RobotParams, robot_jacobian_fd, tip_pose
from .linalg import pseudo_inverse
from .rendering import CameraParams, FeatureSet, Scene

# Per-channel color distance below which a pixel counts as a marker pixel.
COLOR_MATCH_TOL = 0.25
MIN_MARKER_PIXELS = 5


class FeatureLossError(RuntimeError):
    """Raised when the stacked Jacobian or control law lacks a visible feature."""


@dataclass
class IbvsGains:
    lam: float = 0.1
    fd_delta_mm: float = 0.1
    h_convention: str = "transpose"  # "transpose": H blocks are R^T; "direct": R

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("gain must be positive")
        if self.h_convention not in ("transpose", "direct"):
            raise ValueError(f"unknown h_convention {self.h_convention!r}")


def interaction_matrix_point(u, v, f, z):
    """2x6 image Jacobian of a single point feature at (u, v) px.

    f is the focal length in px, z the (assumed constant) feature depth in mm;
    translational columns carry 1/mm, angular columns px/rad.
    """
    if f <= 0 or z <= 0:
        raise ValueError("focal length and depth must be positive")
    return np.array(
        [
            [f / z, 0.0, -u / z, -u * v / f, (f * f + u * u) / f, -v],
            [0.0, f / z, -v / z, (f * f + v * v) / f, -u * v / f, u],
        ]
    )


def stack_image_jacobian(fs: FeatureSet, cam: CameraParams):
    """8x6 stacked image Jacobian over the four features, identity order."""
    if not fs.all_visible():
        raise FeatureLossError("cannot stack image Jacobian with invisible features")
    blocks = [
        interaction_matrix_point(u, v, cam.focal_px, cam.assumed_depth_mm)
        for u, v in fs.uv
    ]
    return np.vstack(blocks)


def interaction_full(j_img, rotation, j_robot, h_convention="transpose"):
    """L_e = J_img @ H @ J_robot with H = blockdiag(R, R).

    The default convention uses R^T blocks (base-frame twists re-expressed in
    the camera/tip frame); "direct" keeps R for auditability.
    """
    j_img = np.asarray(j_img, dtype=float)
    rotation = np.asarray(rotation, dtype=float)
    j_robot = np.asarray(j_robot, dtype=float)
    if j_img.shape[1] != 6 or rotation.shape != (3, 3) or j_robot.shape[0] != 6:
        raise ValueError(
            f"shape mismatch: J_img {j_img.shape}, R {rotation.shape}, J_robot {j_robot.shape}"
        )
    block = rotation.T if h_convention == "transpose" else rotation
    h = np.zeros((6, 6))
    h[:3, :3] = block
    h[3:, 3:] = block
    return j_img @ h @ j_robot


def ibvs_step(fs: FeatureSet, target: FeatureSet, q, gains: IbvsGains, cam: CameraParams,
              params: RobotParams):
    """One control step: dq = -lambda * pinv(L_e) @ (s - s*), in mm."""
    if not (fs.all_visible() and target.all_visible()):
        raise FeatureLossError("control law requires all four features visible")
    j_img = stack_image_jacobian(fs, cam)
    pose = tip_pose(q, params)
    j_robot = robot_jacobian_fd(q, params, gains.fd_delta_mm)
    l_e = interaction_full(j_img, pose.rotation, j_robot, gains.h_convention)
    error = fs.as_vector() - target.as_vector()
    return -gains.lam * (pseudo_inverse(l_e) @ error)


def detect_features(img, scene: Scene) -> FeatureSet:
    """Color-blob feature detection on an RGB frame.

    Per marker color, pixels within COLOR_MATCH_TOL on every channel are
    collected; a marker is visible when at least MIN_MARKER_PIXELS match, and
    its feature is the centroid of the matching pixel centers relative to the
    image center (the default principal point).
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {img.shape}")
    h, w = img.shape[:2]
    cu, cv = w / 2.0, h / 2.0
    uv = np.full((4, 2), np.nan)
    visible = np.zeros(4, dtype=bool)
    red, green, blue = img[..., 0], img[..., 1], img[..., 2]
    for k in range(4):
        c0, c1, c2 = scene.marker_colors[k]
        mask = np.abs(red - c0) < COLOR_MATCH_TOL
        mask &= np.abs(green - c1) < COLOR_MATCH_TOL
        mask &= np.abs(blue - c2) < COLOR_MATCH_TOL
        count = int(mask.sum())
        if count < MIN_MARKER_PIXELS:
            continue
        rows, cols = np.nonzero(mask)
        uv[k] = ((cols + 0.5).mean() - cu, (rows + 0.5).mean() - cv)
        visible[k] = True
    return FeatureSet(uv, visible)
