"""Quality gates on the default-recipe trained policy (session fixture)."""

import numpy as np

from hvservo.dataset import generate_dataset, spiral_path
from hvservo.harness import ScenarioConfig, run_scenario
from hvservo.hvs import HvsConfig
from hvservo.ibvs import IbvsGains
from hvservo.kinematics import tip_pose
from hvservo.metrics import summarize
from hvservo.network import DlbvsGains, forward
from hvservo.rendering import downsample, render, to_grayscale


def test_training_fit_on_clean_renders(policy, scene, camera, robot):
    # the policy should recover the mapped label from clean renders of
    # training poses within 0.05 per component for at least 90% of them
    from hvservo.dataset import map_label

    path = spiral_path(10.0, 20, 5000)[::50]
    hits = 0
    for q in path:
        img = downsample(to_grayscale(render(tip_pose(q, robot), scene, camera)), 64, 64)
        pred = forward(policy, img)
        if np.all(np.abs(pred - map_label(q)) <= 0.05):
            hits += 1
    assert hits / len(path) >= 0.9


def test_validation_mse_small_on_fresh_poses(policy, scene, camera, robot):
    val = generate_dataset(scene, camera, robot, count=200, shadow_fraction=0.0,
                           occlusion_fraction=0.0, seed=99)
    pred = np.array([forward(policy, img) for img in val.images])
    assert float(np.mean((pred - val.labels) ** 2)) < 1e-3


def test_occluded_validation_mse_within_3x_clean(policy, scene, camera, robot):
    val = generate_dataset(scene, camera, robot, count=200, shadow_fraction=0.0,
                           occlusion_fraction=0.0, seed=99)
    pred = np.array([forward(policy, img) for img in val.images])
    clean = float(np.mean((pred - val.labels) ** 2))
    rng = np.random.default_rng(1)
    occluded = val.images.copy()
    for i in range(len(occluded)):
        w, h = rng.integers(8, 25), rng.integers(8, 25)
        x0, y0 = rng.integers(0, 64 - w + 1), rng.integers(0, 64 - h + 1)
        occluded[i, y0 : y0 + h, x0 : x0 + w] = 0.0
    pred_o = np.array([forward(policy, img) for img in occluded])
    occ = float(np.mean((pred_o - val.labels) ** 2))
    assert occ <= 3.0 * clean


def test_every_ibvs_interrupting_window_forces_dlbvs(policy, scene, camera, robot):
    # any occlusion window that begins while the hybrid controller is in IBVS
    # must log DLBVS for all iterations strictly inside the window
    from hvservo.harness import occlusion_replay_script

    cfg = ScenarioConfig(
        start_q_mm=(-10.0, 9.0),
        controller="hvs",
        script=occlusion_replay_script(camera),
        robot=robot,
        camera=camera,
        scene=scene,
        ibvs_gains=IbvsGains(),
        dlbvs_gains=DlbvsGains(),
        hvs=HvsConfig(),
        model=policy,
    )
    log, _ = run_scenario(cfg)
    modes = log.modes
    for window in cfg.script.occlusions:
        if modes[window.start - 2] == "IBVS":  # mode just before the window opens
            inside = modes[window.start : window.end - 1]
            assert set(inside) == {"DLBVS"}, f"window {window.start}-{window.end}"


def test_dlbvs_closed_loop_from_10_minus_8(policy, scene, camera, robot):
    cfg = ScenarioConfig(
        start_q_mm=(10.0, -8.0),
        controller="dlbvs",
        robot=robot,
        camera=camera,
        scene=scene,
        ibvs_gains=IbvsGains(),
        dlbvs_gains=DlbvsGains(),
        hvs=HvsConfig(),
        model=policy,
    )
    log, _ = run_scenario(cfg)
    summary = summarize(log)
    assert summary.task_completed
    assert summary.convergence_iteration <= 300
