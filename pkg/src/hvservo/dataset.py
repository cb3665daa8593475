"""Spiral-path dataset generation for the learned policy, the label mapping,
and the on-disk dataset layout (images/NNNNN.pgm + labels.csv)."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imageio import read_pgm, write_pgm
from .kinematics import RobotParams, tip_pose
from .rendering import CameraParams, Scene, downsample, render, to_grayscale

LABELS_HEADER = ["index", "q1_mm", "q2_mm", "y1", "y2", "shadow", "occluded"]

SHADOW_GAIN_RANGE = (0.4, 1.6)
OCCLUSION_SIDE_RANGE = (8, 24)  # px, inclusive


@dataclass
class Dataset:
    images: np.ndarray  # (n, h, w) grayscale in [0, 1]
    labels: np.ndarray  # (n, 2) mapped labels in (-1, 1)
    q_mm: np.ndarray  # (n, 2) tendon displacements
    shadowed: np.ndarray  # (n,) bool
    occluded: np.ndarray  # (n,) bool
    seed: int = 0


def spiral_path(amplitude_mm=10.0, periods=20, count=5000):
    """(count, 2) tendon states sweeping an Archimedean spiral of the
    workspace: radius grows linearly to amplitude_mm over `periods` turns."""
    if amplitude_mm <= 0 or periods < 1 or count < 1:
        raise ValueError("invalid spiral parameters")
    x = np.arange(1, count + 1, dtype=float)
    radius = amplitude_mm * x / count
    angle = 2.0 * np.pi * periods * x / count
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def map_label(q_mm, units="m"):
    """Squash tendon displacements to (-1, 1): tanh(10 q) with q in metres
    (default) or millimetres."""
    q_mm = np.asarray(q_mm, dtype=float)
    if units == "m":
        return np.tanh(10.0 * q_mm / 1000.0)
    if units == "mm":
        return np.tanh(10.0 * q_mm)
    raise ValueError(f"unknown label units {units!r}")


def unmap_label(y, units="m"):
    """Inverse of map_label, in mm; input clamped away from +-1."""
    y = np.clip(np.asarray(y, dtype=float), -0.9999, 0.9999)
    if units == "m":
        return np.arctanh(y) / 10.0 * 1000.0
    if units == "mm":
        return np.arctanh(y) / 10.0
    raise ValueError(f"unknown label units {units!r}")


def generate_dataset(
    scene: Scene,
    cam: CameraParams,
    robot: RobotParams | None = None,
    amplitude_mm=10.0,
    periods=20,
    count=5000,
    shadow_fraction=0.3,
    occlusion_fraction=0.75,
    seed=0,
    image_size=64,
    label_units="m",
) -> Dataset:
    """Render the spiral sweep into a labelled grayscale dataset.

    Per sample: render at the spiral pose, grayscale, box-downsample to
    image_size; with probability shadow_fraction scale by a random gain in
    [0.4, 1.6]; with probability occlusion_fraction zero a random rectangle
    with sides in [8, 24] px.  Bit-identical for identical seeds.
    """
    if not (0 <= shadow_fraction <= 1 and 0 <= occlusion_fraction <= 1):
        raise ValueError("augmentation fractions must be in [0, 1]")
    robot = robot or RobotParams()
    rng = np.random.default_rng(seed)
    q_path = spiral_path(amplitude_mm, periods, count)
    images = np.empty((count, image_size, image_size))
    shadowed = np.zeros(count, dtype=bool)
    occluded = np.zeros(count, dtype=bool)
    for i in range(count):
        pose = tip_pose(q_path[i], robot)
        img = downsample(to_grayscale(render(pose, scene, cam)), image_size, image_size)
        if rng.random() < shadow_fraction:
            gain = rng.uniform(*SHADOW_GAIN_RANGE)
            img = np.clip(img * gain, 0.0, 1.0)
            shadowed[i] = True
        if rng.random() < occlusion_fraction:
            w = int(rng.integers(OCCLUSION_SIDE_RANGE[0], OCCLUSION_SIDE_RANGE[1] + 1))
            h = int(rng.integers(OCCLUSION_SIDE_RANGE[0], OCCLUSION_SIDE_RANGE[1] + 1))
            x0 = int(rng.integers(0, image_size - w + 1))
            y0 = int(rng.integers(0, image_size - h + 1))
            img[y0 : y0 + h, x0 : x0 + w] = 0.0
            occluded[i] = True
        images[i] = img
    labels = map_label(q_path, units=label_units)
    return Dataset(images, labels, q_path, shadowed, occluded, seed)


def save_dataset(ds: Dataset, out_dir):
    """images/NNNNN.pgm plus labels.csv with the canonical header."""
    out_dir = Path(out_dir)
    img_dir = out_dir / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(ds.images):
        write_pgm(img_dir / f"{i:05d}.pgm", img)
    with open(out_dir / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELS_HEADER)
        for i in range(len(ds.images)):
            writer.writerow(
                [
                    i,
                    repr(float(ds.q_mm[i, 0])),
                    repr(float(ds.q_mm[i, 1])),
                    repr(float(ds.labels[i, 0])),
                    repr(float(ds.labels[i, 1])),
                    int(ds.shadowed[i]),
                    int(ds.occluded[i]),
                ]
            )


def load_dataset(path) -> Dataset:
    path = Path(path)
    rows = []
    with open(path / "labels.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != LABELS_HEADER:
            raise ValueError(f"unexpected labels.csv header {header}")
        rows = list(reader)
    n = len(rows)
    labels = np.empty((n, 2))
    q_mm = np.empty((n, 2))
    shadowed = np.zeros(n, dtype=bool)
    occluded = np.zeros(n, dtype=bool)
    images = None
    for row in rows:
        i = int(row[0])
        q_mm[i] = (float(row[1]), float(row[2]))
        labels[i] = (float(row[3]), float(row[4]))
        shadowed[i] = row[5] == "1"
        occluded[i] = row[6] == "1"
        img = read_pgm(path / "images" / f"{i:05d}.pgm")
        if images is None:
            images = np.empty((n, *img.shape))
        images[i] = img
    return Dataset(images, labels, q_mm, shadowed, occluded)
