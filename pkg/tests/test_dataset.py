import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hvservo.dataset import (
    generate_dataset,
    load_dataset,
    map_label,
    save_dataset,
    spiral_path,
    unmap_label,
)


def test_spiral_endpoint_full_periods():
    path = spiral_path(10.0, 20, 5000)
    assert np.allclose(path[-1], [10.0, 0.0], atol=1e-9)


def test_spiral_first_sample():
    path = spiral_path(10.0, 20, 5000)
    assert np.allclose(path[0], [0.0019994, 0.00005026], atol=1e-7)


def test_spiral_radius_strictly_increasing():
    path = spiral_path(10.0, 20, 5000)
    radius = np.hypot(path[:, 0], path[:, 1])
    assert np.all(np.diff(radius) > 0)
    assert np.allclose(radius, 10.0 * np.arange(1, 5001) / 5000)


def test_spiral_rejects_bad_parameters():
    with pytest.raises(ValueError):
        spiral_path(0.0, 20, 100)
    with pytest.raises(ValueError):
        spiral_path(10.0, 0, 100)


def test_map_label_zero():
    assert np.allclose(map_label([0.0, 0.0]), 0.0)


def test_map_label_ten_mm():
    assert np.allclose(map_label([10.0, 0.0])[0], 0.0996680, atol=1e-6)


def test_unmap_label_inverse_example():
    assert np.allclose(unmap_label([0.0996680, 0.0])[0], 10.0, atol=1e-3)


def test_unmap_clamps_near_one():
    out = unmap_label([0.999999, -0.999999])
    assert np.isfinite(out).all()


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_label_roundtrip(q1, q2):
    q = np.array([q1, q2])
    assert np.abs(unmap_label(map_label(q)) - q).max() < 1e-12


def test_label_units_mm_variant():
    y = map_label([0.01, 0.0], units="mm")
    assert np.isclose(y[0], np.tanh(0.1))
    with pytest.raises(ValueError):
        map_label([0.0, 0.0], units="furlongs")


def test_generate_dataset_counts_and_flags(scene, camera, robot):
    ds = generate_dataset(scene, camera, robot, count=60, shadow_fraction=1.0,
                          occlusion_fraction=0.0, seed=3)
    assert ds.images.shape == (60, 64, 64)
    assert ds.labels.shape == (60, 2)
    assert ds.shadowed.all() and not ds.occluded.any()
    assert np.all(np.abs(ds.labels) < 1.0)


def test_generate_dataset_no_augmentation_matches_plain_renders(scene, camera, robot):
    from hvservo.kinematics import tip_pose
    from hvservo.rendering import downsample, render, to_grayscale

    ds = generate_dataset(scene, camera, robot, count=5, shadow_fraction=0.0,
                          occlusion_fraction=0.0, seed=1)
    path = spiral_path(10.0, 20, 5)
    for i in range(5):
        plain = downsample(to_grayscale(render(tip_pose(path[i], robot), scene, camera)), 64, 64)
        assert np.array_equal(ds.images[i], plain)


def test_generate_dataset_deterministic(scene, camera, robot):
    a = generate_dataset(scene, camera, robot, count=40, shadow_fraction=0.5,
                         occlusion_fraction=0.5, seed=9)
    b = generate_dataset(scene, camera, robot, count=40, shadow_fraction=0.5,
                         occlusion_fraction=0.5, seed=9)
    assert a.images.tobytes() == b.images.tobytes()
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.shadowed, b.shadowed)


def test_generate_dataset_rejects_bad_fractions(scene, camera, robot):
    with pytest.raises(ValueError):
        generate_dataset(scene, camera, robot, count=5, shadow_fraction=1.5)


def test_dataset_roundtrip_through_directory(tmp_path, scene, camera, robot):
    ds = generate_dataset(scene, camera, robot, count=12, shadow_fraction=0.4,
                          occlusion_fraction=0.4, seed=7)
    save_dataset(ds, tmp_path)
    assert (tmp_path / "images" / "00000.pgm").exists()
    assert (tmp_path / "images" / "00011.pgm").exists()
    back = load_dataset(tmp_path)
    assert np.array_equal(back.labels, ds.labels)
    assert np.array_equal(back.q_mm, ds.q_mm)
    assert np.array_equal(back.shadowed, ds.shadowed)
    assert np.array_equal(back.occluded, ds.occluded)
    # images roundtrip through 8-bit quantization
    assert np.abs(back.images - ds.images).max() <= 0.5 / 255 + 1e-12


def test_labels_csv_header(tmp_path, scene, camera, robot):
    ds = generate_dataset(scene, camera, robot, count=3, seed=0)
    save_dataset(ds, tmp_path)
    header = (tmp_path / "labels.csv").read_text().splitlines()[0]
    assert header == "index,q1_mm,q2_mm,y1,y2,shadow,occluded"
