"""Hybrid switching controller: normalized image SAD, mode selection, the
combined per-iteration step, and switch-threshold calibration."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ibvs import FeatureLossError, IbvsGains, detect_features, ibvs_step
from .kinematics import RobotParams, tip_pose
from .network import DlbvsGains, dlbvs_step
from .rendering import CameraParams, Scene, downsample, render, to_grayscale


class Mode(Enum):
    IBVS = "IBVS"
    DLBVS = "DLBVS"


@dataclass
class HvsConfig:
    switch_threshold: float = 0.10
    hysteresis_band: float = 0.0
    max_iterations: int = 300
    convergence_sad: float = 0.06

    def __post_init__(self):
        if not 0 < self.switch_threshold < 1:
            raise ValueError("switch threshold must be in (0, 1)")
        if self.max_iterations < 1 or self.hysteresis_band < 0:
            raise ValueError("invalid controller configuration")


class CalibrationError(RuntimeError):
    """Raised when no calibration start converges under pure IBVS."""


def sad(i0, i):
    """Mean absolute pixel difference of two equally shaped images in [0, 1]."""
    i0 = np.asarray(i0, dtype=float)
    i = np.asarray(i, dtype=float)
    if i0.shape != i.shape:
        raise ValueError(f"image shapes differ: {i0.shape} vs {i.shape}")
    return float(np.abs(i0 - i).mean())


def select_mode(sad_value, features_present, cfg: HvsConfig, prev: Mode = Mode.DLBVS) -> Mode:
    """IBVS iff the SAD is under threshold and all features are present.

    With a hysteresis band, an IBVS hold survives SAD up to threshold + band.
    """
    if sad_value < 0:
        raise ValueError("SAD must be non-negative")
    if not features_present:
        return Mode.DLBVS
    if sad_value < cfg.switch_threshold:
        return Mode.IBVS
    if (
        prev is Mode.IBVS
        and cfg.hysteresis_band > 0
        and sad_value <= cfg.switch_threshold + cfg.hysteresis_band
    ):
        return Mode.IBVS
    return Mode.DLBVS


@dataclass
class HvsStepResult:
    mode: Mode
    dq_mm: np.ndarray
    sad: float
    features_present: bool


def hvs_step(
    q,
    prev_mode: Mode,
    frame,
    target_gray,
    target_features,
    model,
    ibvs_gains: IbvsGains,
    dlbvs_gains: DlbvsGains,
    cfg: HvsConfig,
    scene: Scene,
    cam: CameraParams,
    robot: RobotParams,
) -> HvsStepResult:
    """One hybrid iteration on an already-disturbed RGB frame.

    Never raises from controller internals: feature loss inside the IBVS
    branch falls back to DLBVS for the same iteration.
    """
    gray = downsample(to_grayscale(frame), target_gray.shape[1], target_gray.shape[0])
    sad_value = sad(target_gray, gray)
    features = detect_features(frame, scene)
    features_present = features.all_visible()
    mode = select_mode(sad_value, features_present, cfg, prev_mode)
    if mode is Mode.IBVS:
        try:
            dq = ibvs_step(features, target_features, q, ibvs_gains, cam, robot)
        except FeatureLossError:
            mode = Mode.DLBVS
            dq = dlbvs_step(model, gray, dlbvs_gains)
    else:
        dq = dlbvs_step(model, gray, dlbvs_gains)
    return HvsStepResult(mode, dq, sad_value, features_present)


DEFAULT_CALIBRATION_STARTS = tuple(
    (r * np.cos(a), r * np.sin(a))
    for r in (0.5, 1.5, 3.0, 4.5, 6.0)
    for a in np.radians((45.0, 135.0, 225.0, 315.0))
)


def calibrate_switch_threshold(
    scene: Scene,
    cam: CameraParams,
    robot: RobotParams,
    gains: IbvsGains,
    starts=DEFAULT_CALIBRATION_STARTS,
    cfg: HvsConfig | None = None,
    image_size=64,
):
    """Largest initial SAD from which pure IBVS still converges, minus a 10%
    safety margin."""
    starts = tuple(starts)
    if not starts:
        raise ValueError("calibration grid is empty")
    cfg = cfg or HvsConfig()
    target_rgb = render(tip_pose(np.zeros(2), robot), scene, cam)
    target_gray = downsample(to_grayscale(target_rgb), image_size, image_size)
    target_features = detect_features(target_rgb, scene)
    converged_sads = []
    for start in starts:
        q = np.asarray(start, dtype=float).copy()
        initial_sad = None
        for _ in range(cfg.max_iterations):
            frame = render(tip_pose(q, robot), scene, cam)
            gray = downsample(to_grayscale(frame), image_size, image_size)
            sad_value = sad(target_gray, gray)
            if initial_sad is None:
                initial_sad = sad_value
            if sad_value < cfg.convergence_sad:
                converged_sads.append(initial_sad)
                break
            try:
                q = q + ibvs_step(detect_features(frame, scene), target_features, q, gains, cam, robot)
            except FeatureLossError:
                break
    if not converged_sads:
        raise CalibrationError("IBVS converged from none of the calibration starts")
    return 0.9 * max(converged_sads)
