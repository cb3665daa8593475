"""Deterministic pinhole rendering of a four-marker board, plus scripted
image disturbances (occlusion rectangles, lighting gain).

Images are plain float64 numpy arrays in [0, 1]: (h, w, 3) for RGB,
(h, w) for grayscale.  The camera sits at the robot tip looking along the
tip tangent; the camera frame equals the tip frame.

Projection uses the mirrored-u pinhole convention

    u = c_u - f * X_c / Z_c,    v = c_v + f * Y_c / Z_c,

the unique axis orientation under which the point-feature Jacobian used by
the servo law drives a descending closed loop for this geometry.
"""

from dataclasses import dataclass

import numpy as np

LUMA = np.array([0.299, 0.587, 0.114])

# Dark saturated marker colors on a bright plane: strong luma contrast for the
# image-difference signal, distinct channels for detection by color identity.
DEFAULT_MARKER_COLORS = np.array(
    [
        [0.75, 0.08, 0.08],  # red
        [0.06, 0.55, 0.10],  # green
        [0.10, 0.15, 0.75],  # blue
        [0.90, 0.45, 0.05],  # orange
    ]
)
DEFAULT_BACKGROUND = np.array([0.78, 0.80, 0.82])


@dataclass
class CameraParams:
    width: int = 128
    height: int = 128
    fov_deg: float = 110.0
    focal_px: float | None = None  # derived from fov_deg when None
    assumed_depth_mm: float = 900.0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("image must be at least 16x16")
        if self.focal_px is None:
            self.focal_px = (self.width / 2.0) / np.tan(np.radians(self.fov_deg) / 2.0)
        if self.focal_px <= 0 or self.assumed_depth_mm <= 0:
            raise ValueError("focal length and assumed depth must be positive")

    @property
    def principal_point(self):
        return (self.width / 2.0, self.height / 2.0)


@dataclass
class Scene:
    """Planar board at z = board_distance_mm carrying four colored disks.

    background_color paints the (infinite) board plane; rays that miss the
    plane render black, so the plane/void horizon is visible at large bends.
    """

    board_distance_mm: float = 1400.0
    marker_positions: np.ndarray = None  # (4, 3) mm, world frame
    marker_colors: np.ndarray = None  # (4, 3) RGB
    marker_radius_mm: float = 140.0
    background_color: np.ndarray = None

    def __post_init__(self):
        if self.marker_positions is None:
            self.marker_positions = default_marker_positions(180.0, self.board_distance_mm)
        self.marker_positions = np.asarray(self.marker_positions, dtype=float)
        if self.marker_colors is None:
            self.marker_colors = DEFAULT_MARKER_COLORS.copy()
        self.marker_colors = np.asarray(self.marker_colors, dtype=float)
        if self.background_color is None:
            self.background_color = DEFAULT_BACKGROUND.copy()
        self.background_color = np.asarray(self.background_color, dtype=float)
        if self.marker_positions.shape != (4, 3):
            raise ValueError("expected four 3-D marker positions")
        if not np.allclose(self.marker_positions[:, 2], self.board_distance_mm):
            raise ValueError("markers must lie on the board plane")
        for i in range(4):
            for j in range(i + 1, 4):
                if np.array_equal(self.marker_colors[i], self.marker_colors[j]):
                    raise ValueError("marker colors must be distinct")


def default_marker_positions(half_spacing_mm, board_distance_mm):
    s, d = half_spacing_mm, board_distance_mm
    return np.array([[s, s, d], [-s, s, d], [-s, -s, d], [s, -s, d]])


@dataclass(frozen=True)
class OcclusionWindow:
    start: int
    end: int
    x: int
    y: int
    w: int
    h: int

    def active(self, iteration):
        return self.start <= iteration <= self.end


@dataclass(frozen=True)
class LightingWindow:
    start: int
    end: int
    gain: float

    def active(self, iteration):
        return self.start <= iteration <= self.end


@dataclass(frozen=True)
class Impulse:
    iteration: int
    dq1_mm: float
    dq2_mm: float


@dataclass
class DisturbanceScript:
    occlusions: tuple = ()
    lighting: tuple = ()
    actuator_noise_std_mm: float = 0.0
    actuator_noise_seed: int = 0
    impulses: tuple = ()

    def __post_init__(self):
        self.occlusions = tuple(self.occlusions)
        self.lighting = tuple(self.lighting)
        self.impulses = tuple(self.impulses)
        for w in self.occlusions + self.lighting:
            if w.start > w.end:
                raise ValueError("window start must not exceed end")
        for w in self.lighting:
            if w.gain < 0:
                raise ValueError("lighting gain must be non-negative")
        if self.actuator_noise_std_mm < 0:
            raise ValueError("noise std must be non-negative")

    def active_occlusions(self, iteration):
        return tuple(w for w in self.occlusions if w.active(iteration))

    def active_gains(self, iteration):
        return tuple(w.gain for w in self.lighting if w.active(iteration))


@dataclass
class FeatureSet:
    """Four image features in marker-identity order.

    uv holds pixel coordinates relative to the principal point; rows for
    markers behind the camera are NaN.
    """

    uv: np.ndarray  # (4, 2)
    visible: np.ndarray  # (4,) bool

    def all_visible(self):
        return bool(self.visible.all())

    def as_vector(self):
        """(u1, v1, ..., u4, v4) stacked feature vector."""
        return self.uv.reshape(-1)


_ray_cache = {}


def _camera_rays(cam: CameraParams):
    """(h, w, 3) unit-z ray directions in the camera frame, one per pixel center."""
    cu, cv = cam.principal_point
    key = (cam.width, cam.height, cam.focal_px, cu, cv)
    rays = _ray_cache.get(key)
    if rays is None:
        cols = np.arange(cam.width) + 0.5
        rows = np.arange(cam.height) + 0.5
        x = (cu - cols)[None, :] / cam.focal_px  # mirrored u
        y = (rows - cv)[:, None] / cam.focal_px  # upright v
        rays = np.empty((cam.height, cam.width, 3))
        rays[..., 0] = np.broadcast_to(x, (cam.height, cam.width))
        rays[..., 1] = np.broadcast_to(y, (cam.height, cam.width))
        rays[..., 2] = 1.0
        rays.setflags(write=False)
        _ray_cache[key] = rays
    return rays


def render(pose, scene: Scene, cam: CameraParams):
    """Render the board from the tip pose as an (h, w, 3) RGB image."""
    rays = _camera_rays(cam).reshape(-1, 3)
    dirs = rays @ pose.rotation.T  # world-frame ray directions
    dz = dirs[:, 2]
    front = dz > 1e-12
    t = (scene.board_distance_mm - pose.position[2]) / np.where(front, dz, 1.0)
    px = pose.position[0] + t * dirs[:, 0]
    py = pose.position[1] + t * dirs[:, 1]
    # palette index per pixel: 0 void, 1 board plane, 2..5 markers
    palette = np.vstack([np.zeros(3), scene.background_color, scene.marker_colors])
    idx = front.astype(np.intp)
    r2 = scene.marker_radius_mm**2
    for k in range(4):
        mx, my = scene.marker_positions[k, 0], scene.marker_positions[k, 1]
        hit = (px - mx) ** 2 + (py - my) ** 2 <= r2
        hit &= front
        idx[hit] = k + 2
    return palette[idx].reshape(cam.height, cam.width, 3)


def project_features(pose, scene: Scene, cam: CameraParams, occlusions=()) -> FeatureSet:
    """Exact sub-pixel projections of the marker centers, identity order.

    A feature is visible when it projects in front of the camera, inside the
    image bounds, and its center pixel is not covered by an active occlusion
    rectangle.
    """
    cu, cv = cam.principal_point
    uv = np.full((4, 2), np.nan)
    visible = np.zeros(4, dtype=bool)
    for k in range(4):
        pc = pose.rotation.T @ (scene.marker_positions[k] - pose.position)
        if pc[2] <= 0:
            continue
        u_img = cu - cam.focal_px * pc[0] / pc[2]
        v_img = cv + cam.focal_px * pc[1] / pc[2]
        uv[k] = (u_img - cu, v_img - cv)
        if not (0.0 <= u_img < cam.width and 0.0 <= v_img < cam.height):
            continue
        covered = any(
            w.x <= u_img < w.x + w.w and w.y <= v_img < w.y + w.h for w in occlusions
        )
        visible[k] = not covered
    return FeatureSet(uv, visible)


def apply_disturbances(img, script: DisturbanceScript, iteration: int):
    """Active lighting gains then occlusion rectangles; returns a new image."""
    if iteration < 1:
        raise ValueError("iterations are 1-based")
    out = img.copy()
    for gain in script.active_gains(iteration):
        out = np.clip(out * gain, 0.0, 1.0)
    h, w = out.shape[:2]
    for rect in script.active_occlusions(iteration):
        x0, y0 = max(rect.x, 0), max(rect.y, 0)
        x1, y1 = min(rect.x + rect.w, w), min(rect.y + rect.h, h)
        if x0 < x1 and y0 < y1:
            out[y0:y1, x0:x1] = 0.0
    return out


def to_grayscale(img):
    """Luma grayscale (0.299 R + 0.587 G + 0.114 B) of an RGB image."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {img.shape}")
    return img @ LUMA


_box_weight_cache = {}


def _box_weights(n_src, n_dst):
    """(n_dst, n_src) row-stochastic area-overlap averaging matrix."""
    cached = _box_weight_cache.get((n_src, n_dst))
    if cached is not None:
        return cached
    scale = n_src / n_dst
    edges_dst = np.arange(n_dst + 1) * scale
    weights = np.zeros((n_dst, n_src))
    for i in range(n_dst):
        lo, hi = edges_dst[i], edges_dst[i + 1]
        first, last = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(first, min(last, n_src)):
            weights[i, j] = min(hi, j + 1) - max(lo, j)
    weights /= scale
    weights.setflags(write=False)
    _box_weight_cache[(n_src, n_dst)] = weights
    return weights


def downsample(img, width, height):
    """Box-filter average down to (height, width); exact for integral scales."""
    h, w = img.shape[:2]
    if (h, w) == (height, width):
        return img.copy()
    if height > h or width > w:
        raise ValueError("downsample cannot enlarge")
    wy = _box_weights(h, height)
    wx = _box_weights(w, width)
    if img.ndim == 2:
        return wy @ img @ wx.T
    return np.einsum("ij,jkc,lk->ilc", wy, img, wx)
