"""Shared fixtures.  The trained-policy fixture runs the full default
training once per session and caches the weights on disk keyed by the
training recipe, so repeated test runs skip the (deterministic) retrain."""

import json
import time
from pathlib import Path

import pytest

from hvservo.dataset import generate_dataset
from hvservo.ibvs import IbvsGains
from hvservo.kinematics import RobotParams
from hvservo.network import TrainConfig, load_weights, save_weights, train
from hvservo.rendering import CameraParams, Scene

CACHE_DIR = Path(__file__).parent / "_cache"

DEFAULT_SEED = 0
RECIPE = {
    "dataset": {"count": 5000, "shadow": 0.3, "occlusion": 0.75, "seed": DEFAULT_SEED},
    "train": {"epochs": 20, "batch_size": 32, "lr": 1e-4, "seed": DEFAULT_SEED},
    "scene": "default-v1",
}


@pytest.fixture(scope="session")
def robot():
    return RobotParams()


@pytest.fixture(scope="session")
def camera():
    return CameraParams()


@pytest.fixture(scope="session")
def scene():
    return Scene()


@pytest.fixture(scope="session")
def ibvs_gains():
    return IbvsGains()


@pytest.fixture(scope="session")
def small_dataset(scene, camera, robot):
    """600-sample dataset for unit tests that need real rendered samples."""
    return generate_dataset(
        scene, camera, robot, count=600, shadow_fraction=0.3, occlusion_fraction=0.75, seed=5
    )


@pytest.fixture(scope="session")
def trained(scene, camera, robot):
    """(model, loss curve, training seconds) for the full default recipe."""
    CACHE_DIR.mkdir(exist_ok=True)
    weights = CACHE_DIR / "policy.hvsw"
    info_path = CACHE_DIR / "policy.json"
    if weights.exists() and info_path.exists():
        info = json.loads(info_path.read_text())
        if info.get("recipe") == RECIPE:
            return load_weights(weights), info["curve"], info["train_seconds"]
    ds = generate_dataset(
        scene,
        camera,
        robot,
        count=RECIPE["dataset"]["count"],
        shadow_fraction=RECIPE["dataset"]["shadow"],
        occlusion_fraction=RECIPE["dataset"]["occlusion"],
        seed=RECIPE["dataset"]["seed"],
    )
    cfg = TrainConfig(
        epochs=RECIPE["train"]["epochs"],
        batch_size=RECIPE["train"]["batch_size"],
        learning_rate=RECIPE["train"]["lr"],
    )
    t0 = time.perf_counter()
    model, curve = train(ds, cfg, seed=RECIPE["train"]["seed"])
    seconds = time.perf_counter() - t0
    save_weights(model, weights)
    info_path.write_text(
        json.dumps({"recipe": RECIPE, "curve": curve, "train_seconds": seconds})
    )
    return model, curve, seconds


@pytest.fixture(scope="session")
def policy(trained):
    return trained[0]
