import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hvservo.hvs import sad
from hvservo.ibvs import (
    FeatureLossError,
    IbvsGains,
    detect_features,
    ibvs_step,
    interaction_full,
    interaction_matrix_point,
    stack_image_jacobian,
)
from hvservo.kinematics import tip_pose
from hvservo.rendering import (
    DisturbanceScript,
    FeatureSet,
    OcclusionWindow,
    apply_disturbances,
    downsample,
    project_features,
    render,
    to_grayscale,
)


def reference_point_jacobian(u, v, f, z):
    """Independent expression-by-expression evaluation of the 2x6 point block."""
    row1 = [f / z, 0.0, -(u / z), -(u * v) / f, (f**2 + u**2) / f, -v]
    row2 = [0.0, f / z, -(v / z), (f**2 + v**2) / f, -(u * v) / f, u]
    return np.array([row1, row2])


def test_centered_point_block():
    out = interaction_matrix_point(0.0, 0.0, 100.0, 0.5)
    assert np.array_equal(out, [[200, 0, 0, 0, 100, 0], [0, 200, 0, 100, 0, 0]])


def test_worked_point_block():
    out = interaction_matrix_point(50.0, -20.0, 100.0, 0.5)
    expected = [[200, 0, -100, 10, 125, 20], [0, 200, 40, 104, 10, 50]]
    assert np.array_equal(out, expected)


def test_centered_point_positive_x_gain():
    out = interaction_matrix_point(0.0, 0.0, 100.0, 0.5)
    assert out[0, 0] > 0


def test_point_block_matches_reference_on_random_inputs():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        u, v = rng.uniform(-64, 64, 2)
        f = rng.uniform(20, 200)
        z = rng.uniform(50, 2000)
        ours = interaction_matrix_point(u, v, f, z)
        ref = reference_point_jacobian(u, v, f, z)
        assert np.allclose(ours, ref, rtol=1e-12, atol=0)


def test_point_block_rejects_bad_depth():
    with pytest.raises(ValueError):
        interaction_matrix_point(0.0, 0.0, 100.0, 0.0)
    with pytest.raises(ValueError):
        interaction_matrix_point(0.0, 0.0, -1.0, 0.5)


def _visible_feature_set(uv):
    return FeatureSet(np.asarray(uv, dtype=float), np.ones(4, dtype=bool))


def test_stacked_jacobian_shape_and_blocks(camera):
    fs = _visible_feature_set(np.zeros((4, 2)))
    jac = stack_image_jacobian(fs, camera)
    assert jac.shape == (8, 6)
    block = interaction_matrix_point(0.0, 0.0, camera.focal_px, camera.assumed_depth_mm)
    for i in range(4):
        assert np.array_equal(jac[2 * i : 2 * i + 2], block)


def test_stacked_jacobian_feature_loss(camera):
    fs = FeatureSet(np.zeros((4, 2)), np.array([True, True, False, True]))
    with pytest.raises(FeatureLossError):
        stack_image_jacobian(fs, camera)


def test_interaction_full_identity_rotation():
    rng = np.random.default_rng(0)
    j_img = rng.standard_normal((8, 6))
    j_rob = rng.standard_normal((6, 2))
    assert np.allclose(interaction_full(j_img, np.eye(3), j_rob), j_img @ j_rob)


def test_interaction_full_block_structure():
    from hvservo.linalg import rot_z

    r = rot_z(0.3)
    j_img = np.eye(8, 6)
    j_rob = np.eye(6, 2)
    # H must place r.T on both diagonal blocks and zeros elsewhere
    full = interaction_full(np.eye(6), r, np.eye(6))
    expected = np.zeros((6, 6))
    expected[:3, :3] = r.T
    expected[3:, 3:] = r.T
    assert np.allclose(full, expected)
    assert interaction_full(j_img, r, j_rob).shape == (8, 2)


def test_interaction_full_shape_mismatch():
    with pytest.raises(ValueError):
        interaction_full(np.zeros((8, 5)), np.eye(3), np.zeros((6, 2)))
    with pytest.raises(ValueError):
        interaction_full(np.zeros((8, 6)), np.eye(3), np.zeros((5, 2)))


def test_ibvs_step_zero_error(scene, camera, robot, ibvs_gains):
    fs = project_features(tip_pose(np.zeros(2), robot), scene, camera)
    dq = ibvs_step(fs, fs, np.zeros(2), ibvs_gains, camera, robot)
    assert np.allclose(dq, 0.0, atol=1e-12)


def test_ibvs_step_orthonormal_columns_contrived():
    # pinv of a matrix with orthonormal columns is its transpose
    l_e = np.zeros((8, 2))
    l_e[0, 0] = 1.0
    l_e[1, 1] = 1.0
    e = np.zeros(8)
    e[0], e[1] = 2.0, -4.0
    from hvservo.linalg import pseudo_inverse

    dq = -0.1 * (pseudo_inverse(l_e) @ e)
    assert np.allclose(dq, [-0.2, 0.4])


def test_ibvs_step_feature_loss(scene, camera, robot, ibvs_gains):
    target = project_features(tip_pose(np.zeros(2), robot), scene, camera)
    lost = FeatureSet(target.uv.copy(), np.array([True, False, True, True]))
    with pytest.raises(FeatureLossError):
        ibvs_step(lost, target, np.zeros(2), ibvs_gains, camera, robot)


def test_single_step_descent_from_1_1(scene, camera, robot, ibvs_gains):
    target = detect_features(render(tip_pose(np.zeros(2), robot), scene, camera), scene)
    q = np.array([1.0, 1.0])
    fs = detect_features(render(tip_pose(q, robot), scene, camera), scene)
    err0 = np.linalg.norm(fs.as_vector() - target.as_vector())
    dq = ibvs_step(fs, target, q, ibvs_gains, camera, robot)
    fs1 = detect_features(render(tip_pose(q + dq, robot), scene, camera), scene)
    err1 = np.linalg.norm(fs1.as_vector() - target.as_vector())
    assert err1 < err0


def test_step_invariant_to_joint_scaling(scene, camera, robot):
    target = project_features(tip_pose(np.zeros(2), robot), scene, camera)
    q = np.array([2.0, -1.0])
    fs = project_features(tip_pose(q, robot), scene, camera)
    base = ibvs_step(fs, target, q, IbvsGains(lam=0.1), camera, robot)
    # scaling the error by c and the gain by 1/c leaves the step unchanged;
    # the error is scaled through the target so L_e stays evaluated at fs
    scaled_target = FeatureSet(fs.uv - 3.0 * (fs.uv - target.uv), target.visible.copy())
    scaled = ibvs_step(fs, scaled_target, q, IbvsGains(lam=0.1 / 3.0), camera, robot)
    assert np.allclose(base, scaled, rtol=1e-9)


def _ibvs_only_run(q0, scene, camera, robot, gains, iterations=150):
    target_rgb = render(tip_pose(np.zeros(2), robot), scene, camera)
    target_gray = downsample(to_grayscale(target_rgb), 64, 64)
    target = detect_features(target_rgb, scene)
    q = np.asarray(q0, dtype=float).copy()
    sads, errs = [], []
    for _ in range(iterations):
        frame = render(tip_pose(q, robot), scene, camera)
        sads.append(sad(target_gray, downsample(to_grayscale(frame), 64, 64)))
        fs = detect_features(frame, scene)
        if not fs.all_visible():
            break
        errs.append(np.linalg.norm(fs.as_vector() - target.as_vector()))
        if sads[-1] < 0.06 and errs[-1] < 1.0:
            break
        q = q + ibvs_step(fs, target, q, gains, camera, robot)
    return np.array(sads), np.array(errs), q


def test_closed_loop_from_3_2(scene, camera, robot, ibvs_gains):
    sads, errs, q = _ibvs_only_run((3.0, 2.0), scene, camera, robot, ibvs_gains, 100)
    assert sads.min() < 0.06
    # monotone within the detector's centroid quantization grain
    diffs = np.diff(errs[4:])
    assert np.all(diffs <= 0.01)


def test_descent_property_grid(scene, camera, robot, ibvs_gains):
    for q1 in np.linspace(-4, 4, 5):
        for q2 in np.linspace(-4, 4, 5):
            sads, _, _ = _ibvs_only_run((q1, q2), scene, camera, robot, ibvs_gains)
            assert sads.min() < 0.06, f"no convergence from ({q1}, {q2})"


def test_detect_features_identity_order_and_accuracy(scene, camera, robot):
    pose = tip_pose(np.array([1.5, -2.0]), robot)
    exact = project_features(pose, scene, camera)
    detected = detect_features(render(pose, scene, camera), scene)
    assert detected.all_visible()
    assert np.abs(detected.uv - exact.uv).max() < 0.5


def test_detect_features_occluded_marker(scene, camera, robot):
    pose = tip_pose(np.zeros(2), robot)
    fs = project_features(pose, scene, camera)
    cu, cv = camera.principal_point
    u, v = fs.uv[1] + np.array([cu, cv])
    script = DisturbanceScript(occlusions=(OcclusionWindow(1, 1, int(u) - 14, int(v) - 14, 28, 28),))
    img = apply_disturbances(render(pose, scene, camera), script, 1)
    detected = detect_features(img, scene)
    assert not detected.visible[1]
    assert detected.visible[[0, 2, 3]].all()


def test_detect_features_all_black_frame(scene):
    detected = detect_features(np.zeros((128, 128, 3)), scene)
    assert not detected.visible.any()


@settings(max_examples=50, deadline=None)
@given(st.floats(-40, 40), st.floats(-40, 40), st.floats(30, 90), st.floats(200, 1500))
def test_point_block_reference_property(u, v, f, z):
    assert np.allclose(
        interaction_matrix_point(u, v, f, z), reference_point_jacobian(u, v, f, z), rtol=1e-12
    )
