"""Scenario runner wiring kinematics -> renderer -> controllers -> metrics,
plus the HVS-vs-DLBVS comparison and camera-frame dumps.

Per iteration: actuator noise, impulses, kinematics, render, lighting,
occlusion, controller, state update.  The clock is injected so runs can be
reproduced byte-for-byte under a deterministic clock.
"""

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .hvs import HvsConfig, HvsStepResult, Mode, hvs_step, sad
from .ibvs import FeatureLossError, IbvsGains, detect_features, ibvs_step
from .imageio import write_ppm
from .kinematics import RobotParams, tip_pose
from .metrics import RunLog, RunRecord, summarize, write_run_csv, write_summary_csv
from .network import DlbvsGains, dlbvs_step
from .rendering import (
    CameraParams,
    DisturbanceScript,
    OcclusionWindow,
    Scene,
    apply_disturbances,
    downsample,
    render,
    to_grayscale,
)

CONTROLLERS = ("ibvs", "dlbvs", "hvs")


@dataclass
class ScenarioConfig:
    start_q_mm: tuple = (0.0, 0.0)
    controller: str = "hvs"
    script: DisturbanceScript = field(default_factory=DisturbanceScript)
    seed: int = 0
    robot: RobotParams = field(default_factory=RobotParams)
    camera: CameraParams = field(default_factory=CameraParams)
    scene: Scene = field(default_factory=Scene)
    ibvs_gains: IbvsGains = field(default_factory=IbvsGains)
    dlbvs_gains: DlbvsGains = field(default_factory=DlbvsGains)
    hvs: HvsConfig = field(default_factory=HvsConfig)
    model: object = None
    policy_image_size: int = 64
    name: str = ""

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.controller in ("dlbvs", "hvs") and self.model is None:
            raise ValueError(f"controller {self.controller!r} needs a trained model")


def run_scenario(cfg: ScenarioConfig, clock=time.perf_counter, frame_every=0):
    """Run the closed loop for cfg.hvs.max_iterations iterations.

    Returns (RunLog, frames) where frames is a list of (iteration, rgb image)
    collected every frame_every iterations (empty when 0).
    """
    size = cfg.policy_image_size
    target_rgb = render(tip_pose(np.zeros(2), cfg.robot), cfg.scene, cfg.camera)
    target_gray = downsample(to_grayscale(target_rgb), size, size)
    target_features = detect_features(target_rgb, cfg.scene)
    if not target_features.all_visible():
        raise RuntimeError("target features are not all visible; check the scene")
    noise_rng = np.random.default_rng(cfg.script.actuator_noise_seed)
    q = np.asarray(cfg.start_q_mm, dtype=float).copy()
    prev_mode = Mode.DLBVS
    records = []
    frames = []
    for iteration in range(1, cfg.hvs.max_iterations + 1):
        t0 = clock()
        if cfg.script.actuator_noise_std_mm > 0:
            q = q + noise_rng.normal(0.0, cfg.script.actuator_noise_std_mm, size=2)
        for imp in cfg.script.impulses:
            if imp.iteration == iteration:
                q = q + np.array([imp.dq1_mm, imp.dq2_mm])
        frame = render(tip_pose(q, cfg.robot), cfg.scene, cfg.camera)
        frame = apply_disturbances(frame, cfg.script, iteration)
        if frame_every and (iteration - 1) % frame_every == 0:
            frames.append((iteration, frame))
        if cfg.controller == "hvs":
            result = hvs_step(
                q,
                prev_mode,
                frame,
                target_gray,
                target_features,
                cfg.model,
                cfg.ibvs_gains,
                cfg.dlbvs_gains,
                cfg.hvs,
                cfg.scene,
                cfg.camera,
                cfg.robot,
            )
        else:
            gray = downsample(to_grayscale(frame), size, size)
            sad_value = sad(target_gray, gray)
            features = detect_features(frame, cfg.scene)
            if cfg.controller == "ibvs":
                try:
                    dq = ibvs_step(features, target_features, q, cfg.ibvs_gains, cfg.camera, cfg.robot)
                except FeatureLossError:
                    dq = np.zeros(2)
                result = HvsStepResult(Mode.IBVS, dq, sad_value, features.all_visible())
            else:
                dq = dlbvs_step(cfg.model, gray, cfg.dlbvs_gains)
                result = HvsStepResult(Mode.DLBVS, dq, sad_value, features.all_visible())
        wall_ms = (clock() - t0) * 1000.0
        records.append(
            RunRecord(
                iteration=iteration,
                mode=result.mode.value,
                q1_mm=q[0],
                q2_mm=q[1],
                dq1_mm=result.dq_mm[0],
                dq2_mm=result.dq_mm[1],
                sad=result.sad,
                features_visible=result.features_present,
                wall_ms=wall_ms,
            )
        )
        q = q + result.dq_mm
        prev_mode = result.mode
    meta = {
        "controller": cfg.controller,
        "name": cfg.name,
        "start_q_mm": tuple(float(v) for v in cfg.start_q_mm),
        "seed": cfg.seed,
        "switch_threshold": cfg.hvs.switch_threshold,
        "convergence_sad": cfg.hvs.convergence_sad,
    }
    return RunLog(records, meta), frames


def save_frames(frames, out_dir):
    """Write collected (iteration, rgb) frames as frame_NNN.ppm files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for iteration, img in frames:
        path = out_dir / f"frame_{iteration:03d}.ppm"
        write_ppm(path, img)
        paths.append(path)
    return paths


def run_comparison(start_q_mm, base: ScenarioConfig, clock=time.perf_counter, out_dir=None):
    """Run HVS and pure DLBVS from the same start with identical seeds.

    Returns (hvs_summary, dlbvs_summary); with out_dir set, persists both
    run.csv files and a two-row comparison.csv."""
    # warm both controller code paths so first-run costs do not bias the
    # per-iteration timing comparison
    warm = replace(base, controller="hvs", start_q_mm=tuple(start_q_mm),
                   hvs=replace(base.hvs, max_iterations=3))
    run_scenario(warm, clock=clock)
    run_scenario(replace(warm, controller="dlbvs"), clock=clock)
    results = {}
    for controller in ("hvs", "dlbvs"):
        cfg = replace(base, controller=controller, start_q_mm=tuple(start_q_mm), name=controller)
        log, _ = run_scenario(cfg, clock=clock)
        results[controller] = (log, summarize(log))
    if out_dir is not None:
        out_dir = Path(out_dir)
        for controller, (log, _) in results.items():
            sub = out_dir / controller
            sub.mkdir(parents=True, exist_ok=True)
            write_run_csv(log, sub / "run.csv")
        write_summary_csv(
            [results["hvs"][1], results["dlbvs"][1]], out_dir / "comparison.csv"
        )
    return results["hvs"][1], results["dlbvs"][1]


def occlusion_replay_script(cam: CameraParams, windows=((50, 80), (110, 140), (190, 230))):
    """Scripted center occlusions that hide all four markers near the target."""
    side_w = int(round(cam.width * 0.375))
    side_h = int(round(cam.height * 0.375))
    x = (cam.width - side_w) // 2
    y = (cam.height - side_h) // 2
    return DisturbanceScript(
        occlusions=tuple(OcclusionWindow(s, e, x, y, side_w, side_h) for s, e in windows)
    )
