"""Flat key = value run configuration: parsing, defaults, and assembly of the
per-module parameter objects.  Unknown keys are startup errors."""

from dataclasses import dataclass, field
from pathlib import Path

from .hvs import HvsConfig
from .ibvs import IbvsGains
from .kinematics import RobotParams
from .network import DlbvsGains, TrainConfig
from .rendering import (
    CameraParams,
    DisturbanceScript,
    Impulse,
    LightingWindow,
    OcclusionWindow,
    Scene,
    default_marker_positions,
)


class ConfigError(ValueError):
    pass


def _parse_occlusions(text):
    windows = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        fields = [int(v) for v in part.split(":")]
        if len(fields) != 6:
            raise ConfigError(f"occlusion window needs start:end:x:y:w:h, got {part!r}")
        windows.append(OcclusionWindow(*fields))
    return tuple(windows)


def _parse_lighting(text):
    windows = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        fields = part.split(":")
        if len(fields) != 3:
            raise ConfigError(f"lighting window needs start:end:gain, got {part!r}")
        windows.append(LightingWindow(int(fields[0]), int(fields[1]), float(fields[2])))
    return tuple(windows)


def _parse_impulses(text):
    impulses = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        fields = part.split(":")
        if len(fields) != 3:
            raise ConfigError(f"impulse needs iter:dq1:dq2, got {part!r}")
        impulses.append(Impulse(int(fields[0]), float(fields[1]), float(fields[2])))
    return tuple(impulses)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


# key -> (type parser, default)
KEY_TABLE = {
    "backbone_length_mm": (float, 500.0),
    "tendon_pitch_radius_mm": (float, 10.0),
    "fd_delta_mm": (float, 0.1),
    "image_width": (int, 128),
    "image_height": (int, 128),
    "fov_deg": (float, 110.0),
    "focal_px": (float, None),
    "board_distance_mm": (float, 1400.0),
    "assumed_depth_mm": (float, 900.0),
    "marker_radius_mm": (float, 140.0),
    "marker_half_spacing_mm": (float, 180.0),
    "ibvs_lambda": (float, 0.1),
    "h_convention": (str, "transpose"),
    "dlbvs_alpha": (float, 0.05),
    "label_units": (str, "m"),
    "switch_threshold": (float, 0.10),
    "hysteresis_band": (float, 0.0),
    "max_iterations": (int, 300),
    "convergence_sad": (float, 0.06),
    "epochs": (int, 20),
    "batch_size": (int, 32),
    "learning_rate": (float, 1e-4),
    "dataset_count": (int, 5000),
    "spiral_amplitude_mm": (float, 10.0),
    "spiral_periods": (int, 20),
    "shadow_fraction": (float, 0.3),
    "occlusion_fraction": (float, 0.75),
    "policy_image_size": (int, 64),
    "seed": (int, 0),
    "weights_file": (str, "weights.hvsw"),
    "occlusion_windows": (_parse_occlusions, ()),
    "lighting_windows": (_parse_lighting, ()),
    "actuator_noise_std_mm": (float, 0.0),
    "actuator_noise_seed": (int, 0),
    "actuator_noise_enabled": (_bool, True),
    "impulses": (_parse_impulses, ()),
}


@dataclass
class WorkbenchConfig:
    robot: RobotParams
    camera: CameraParams
    scene: Scene
    ibvs_gains: IbvsGains
    dlbvs_gains: DlbvsGains
    hvs: HvsConfig
    train: TrainConfig
    script: DisturbanceScript
    policy_image_size: int = 64
    label_units: str = "m"
    dataset_count: int = 5000
    spiral_amplitude_mm: float = 10.0
    spiral_periods: int = 20
    shadow_fraction: float = 0.3
    occlusion_fraction: float = 0.75
    seed: int = 0
    weights_file: str = "weights.hvsw"
    raw: dict = field(default_factory=dict)


def _read_pairs(path):
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in text.split("=", 1))
        if key not in KEY_TABLE:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def load_config(path=None, overrides=None) -> WorkbenchConfig:
    """Build a WorkbenchConfig from defaults, an optional file, and overrides."""
    values = {key: default for key, (_, default) in KEY_TABLE.items()}
    if path is not None:
        for key, text in _read_pairs(path).items():
            parser = KEY_TABLE[key][0]
            try:
                values[key] = parser(text)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {text!r} ({exc})") from exc
    if overrides:
        for key, val in overrides.items():
            if key not in KEY_TABLE:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = val
    return _assemble(values)


def _assemble(v) -> WorkbenchConfig:
    robot = RobotParams(
        backbone_length_mm=v["backbone_length_mm"],
        tendon_pitch_radius_mm=v["tendon_pitch_radius_mm"],
        fd_delta_mm=v["fd_delta_mm"],
    )
    camera = CameraParams(
        width=v["image_width"],
        height=v["image_height"],
        fov_deg=v["fov_deg"],
        focal_px=v["focal_px"],
        assumed_depth_mm=v["assumed_depth_mm"],
    )
    scene = Scene(
        board_distance_mm=v["board_distance_mm"],
        marker_positions=default_marker_positions(
            v["marker_half_spacing_mm"], v["board_distance_mm"]
        ),
        marker_radius_mm=v["marker_radius_mm"],
    )
    noise_std = v["actuator_noise_std_mm"] if v["actuator_noise_enabled"] else 0.0
    script = DisturbanceScript(
        occlusions=v["occlusion_windows"],
        lighting=v["lighting_windows"],
        actuator_noise_std_mm=noise_std,
        actuator_noise_seed=v["actuator_noise_seed"],
        impulses=v["impulses"],
    )
    return WorkbenchConfig(
        robot=robot,
        camera=camera,
        scene=scene,
        ibvs_gains=IbvsGains(
            lam=v["ibvs_lambda"], fd_delta_mm=v["fd_delta_mm"], h_convention=v["h_convention"]
        ),
        dlbvs_gains=DlbvsGains(alpha=v["dlbvs_alpha"], label_units=v["label_units"]),
        hvs=HvsConfig(
            switch_threshold=v["switch_threshold"],
            hysteresis_band=v["hysteresis_band"],
            max_iterations=v["max_iterations"],
            convergence_sad=v["convergence_sad"],
        ),
        train=TrainConfig(
            epochs=v["epochs"], batch_size=v["batch_size"], learning_rate=v["learning_rate"]
        ),
        script=script,
        policy_image_size=v["policy_image_size"],
        label_units=v["label_units"],
        dataset_count=v["dataset_count"],
        spiral_amplitude_mm=v["spiral_amplitude_mm"],
        spiral_periods=v["spiral_periods"],
        shadow_fraction=v["shadow_fraction"],
        occlusion_fraction=v["occlusion_fraction"],
        seed=v["seed"],
        weights_file=v["weights_file"],
        raw=dict(v),
    )
