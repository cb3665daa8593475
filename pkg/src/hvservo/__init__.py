"""Hybrid visual servoing workbench for a tendon-driven continuum robot:
constant-curvature kinematics, a software pinhole renderer, classical
image-based servoing, a from-scratch convolutional servo policy, and the
SAD-driven switching controller that arbitrates between them."""

from .config import ConfigError, WorkbenchConfig, load_config
from .dataset import Dataset, generate_dataset, load_dataset, map_label, save_dataset, spiral_path, unmap_label
from .harness import ScenarioConfig, occlusion_replay_script, run_comparison, run_scenario, save_frames
from .hvs import CalibrationError, HvsConfig, Mode, calibrate_switch_threshold, hvs_step, sad, select_mode
from .ibvs import (
    FeatureLossError,
    IbvsGains,
    detect_features,
    ibvs_step,
    interaction_full,
    interaction_matrix_point,
    stack_image_jacobian,
)
from .kinematics import Pose, RobotParams, robot_jacobian_fd, tip_pose
from .linalg import pseudo_inverse, rotation_exp, rotation_log
from .metrics import (
    RunLog,
    RunRecord,
    RunSummary,
    convergence_iteration,
    read_run_csv,
    smoothness,
    summarize,
    write_run_csv,
    write_summary_csv,
)
from .network import (
    DlbvsGains,
    PolicyModel,
    TrainConfig,
    TrainingDivergedError,
    build_policy,
    dlbvs_step,
    forward,
    grad_check,
    load_weights,
    save_weights,
    train,
)
from .plots import emit_plots
from .rendering import (
    CameraParams,
    DisturbanceScript,
    FeatureSet,
    Impulse,
    LightingWindow,
    OcclusionWindow,
    Scene,
    apply_disturbances,
    downsample,
    project_features,
    render,
    to_grayscale,
)

__version__ = "0.1.0"
